// Command-line front end: data generation, training, prediction,
// extrapolation and evaluation for the POD+LSTM surrogate pipeline.

#include "rom/checkpoint.hpp"
#include "rom/pipeline.hpp"
#include "rom/snapshot_io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

namespace fs = std::filesystem;
using rom::PipelineConfig;

PipelineConfig load_config(const std::string& config_path, std::uint64_t seed,
                           const std::string& out_dir)
{
    nlohmann::json j;
    if (!config_path.empty()) {
        std::ifstream is(config_path);
        if (!is)
            throw std::runtime_error("cannot open config file '" + config_path + "'");
        is >> j;
    }
    PipelineConfig cfg = rom::pipeline_config_from_json(j);
    cfg.seed = seed;
    cfg.out_dir = out_dir;
    return cfg;
}

void write_fom_files(const rom::FOMData& data, const std::string& out_dir)
{
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    rom::write_snapshots((out / "fom_train.snap").string(), data.train.snapshots);
    rom::write_params_csv((out / "fom_train_params.csv").string(), data.train.params);
    rom::write_snapshots((out / "fom_test.snap").string(), data.test.snapshots);
    rom::write_params_csv((out / "fom_test_params.csv").string(), data.test.params);
}

rom::FOMData load_fom_files(const std::string& dir)
{
    const fs::path d(dir);
    rom::FOMData data;
    data.train.snapshots = rom::read_snapshots((d / "fom_train.snap").string());
    data.train.params = rom::read_params_csv((d / "fom_train_params.csv").string(),
                                             &data.train.n_mu);
    data.test.snapshots = rom::read_snapshots((d / "fom_test.snap").string());
    data.test.params = rom::read_params_csv((d / "fom_test_params.csv").string(),
                                            &data.test.n_mu);
    data.train.validate();
    data.test.validate();
    return data;
}

int run_generate_fom(const PipelineConfig& cfg)
{
    const rom::FOMData data = rom::pipeline_fom_data(cfg);
    write_fom_files(data, cfg.out_dir);
    std::printf("wrote %zu training and %zu test instances under %s\n",
                data.train.snapshots.n_instances, data.test.snapshots.n_instances,
                cfg.out_dir.c_str());
    return 0;
}

int run_train_mu(PipelineConfig cfg, const std::string& data_dir)
{
    const rom::FOMData data = load_fom_files(data_dir.empty() ? cfg.out_dir : data_dir);
    const rom::ReducedTrainingData red = rom::pipeline_reduce(cfg, data);

    rom::ParamSeqConfig mc = cfg.mu_model;
    mc.input_dim = red.basis.reduced_dim();
    mc.n_params = data.train.n_mu;
    mc.resolve();
    const rom::WindowDataset ds = rom::build_window_dataset(
        red.reduced_model_space, data.train.params, data.train.snapshots.n_instances,
        data.train.snapshots.n_steps, mc.seq_len);

    rom::ParamSeqModel model(mc, rom::Rng::derive(cfg.seed, "mu-weights"));
    rom::TrainConfig tc = cfg.mu_train;
    tc.seed = rom::Rng::derive(cfg.seed, "mu-train");
    const rom::TrainHistory history = rom::train_param_seq(model, ds, tc);

    const rom::Checkpoint ck =
        rom::make_mu_checkpoint(model, red.basis, red.scaling, history, cfg.seed);
    const std::string ck_dir = (fs::path(cfg.out_dir) / "mu_ckpt").string();
    rom::save_checkpoint(ck_dir, ck);
    std::printf("mu model: %zu epochs, best val %.6e at epoch %zu -> %s\n",
                history.train_loss.size(), history.best_val, history.best_epoch,
                ck_dir.c_str());
    return 0;
}

int run_train_t(PipelineConfig cfg, const std::string& data_dir)
{
    const rom::FOMData data = load_fom_files(data_dir.empty() ? cfg.out_dir : data_dir);
    const rom::ReducedTrainingData red = rom::pipeline_reduce(cfg, data);

    rom::ForecastConfig tc_model = cfg.t_model;
    tc_model.input_dim = red.basis.reduced_dim();
    tc_model.n_params = data.train.n_mu;
    tc_model.resolve();
    const rom::WindowDataset ds = rom::build_window_dataset(
        red.reduced_model_space, data.train.params, data.train.snapshots.n_instances,
        data.train.snapshots.n_steps, tc_model.past_len + tc_model.horizon);

    rom::ForecastModel model(tc_model, rom::Rng::derive(cfg.seed, "t-weights"));
    rom::TrainConfig tc = cfg.t_train;
    tc.seed = rom::Rng::derive(cfg.seed, "t-train");
    const rom::TrainHistory history = rom::train_forecast(model, ds, tc);

    const rom::Checkpoint ck =
        rom::make_t_checkpoint(model, red.basis, red.scaling, history, cfg.seed);
    const std::string ck_dir = (fs::path(cfg.out_dir) / "t_ckpt").string();
    rom::save_checkpoint(ck_dir, ck);
    std::printf("t model: %zu epochs, best val %.6e at epoch %zu -> %s\n",
                history.train_loss.size(), history.best_val, history.best_epoch,
                ck_dir.c_str());
    return 0;
}

int run_predict(const PipelineConfig& cfg, const std::string& ckpt_dir,
                const std::string& params_path)
{
    const rom::Checkpoint ck = rom::load_checkpoint(ckpt_dir);
    rom::MuCheckpointData mu = rom::mu_from_checkpoint(ck);

    std::size_t n_mu = 0;
    const rom::Matrix params = rom::read_params_csv(params_path, &n_mu);
    const std::size_t n_steps = cfg.train_steps;
    if (params.cols() % n_steps != 0)
        throw std::runtime_error("predict: parameter columns not divisible by train_steps");
    const std::size_t n_test = params.cols() / n_steps;

    const rom::ParamSeqPrediction pred = rom::predict_param_seq(
        mu.model, mu.basis, mu.scaling, params, n_test, n_steps);

    fs::create_directories(cfg.out_dir);
    rom::SnapshotMatrix ps;
    ps.n_dofs = mu.basis.n_dofs;
    ps.n_channels = mu.basis.n_channels;
    ps.n_instances = n_test;
    ps.n_steps = n_steps;
    ps.data = pred.full;
    rom::write_snapshots((fs::path(cfg.out_dir) / "prediction.snap").string(), ps);

    nlohmann::json timing;
    timing["decoder_queries_per_instance"] = pred.decoder_queries_per_instance;
    timing["t_nn"] = {{"min", pred.t_nn.min}, {"mean", pred.t_nn.mean()}, {"max", pred.t_nn.max}};
    timing["t_rec"] = {{"min", pred.t_rec.min}, {"mean", pred.t_rec.mean()}, {"max", pred.t_rec.max}};
    std::ofstream os(fs::path(cfg.out_dir) / "prediction_timing.json");
    os << timing.dump(2) << "\n";
    std::printf("prediction: %zu instances x %zu steps, %zu decoder queries/instance\n",
                n_test, n_steps, pred.decoder_queries_per_instance);
    return 0;
}

int run_extrapolate(const PipelineConfig& cfg, const std::string& ckpt_dir,
                    const std::string& prediction_path, const std::string& params_path)
{
    const rom::Checkpoint ck = rom::load_checkpoint(ckpt_dir);
    rom::TCheckpointData tm = rom::t_from_checkpoint(ck);

    const rom::SnapshotMatrix pred = rom::read_snapshots(prediction_path);
    std::size_t n_mu = 0;
    const rom::Matrix params = rom::read_params_csv(params_path, &n_mu);

    rom::Matrix reduced = tm.basis.project(pred.data);
    reduced = rom::apply_scaling(tm.scaling, reduced);

    rom::Matrix test_mus(n_mu, pred.n_instances);
    for (std::size_t inst = 0; inst < pred.n_instances; ++inst)
        for (std::size_t r = 0; r < n_mu; ++r)
            test_mus(r, inst) = params(1 + r, inst * pred.n_steps);

    const std::size_t ext_start = cfg.ext_start ? cfg.ext_start : pred.n_steps;
    const std::size_t windows = cfg.ext_windows ? cfg.ext_windows : 1;
    const rom::RolloutResult roll = rom::rollout_forecast(
        tm.model, reduced, pred.n_instances, pred.n_steps, test_mus, ext_start, windows);

    const rom::Matrix ext_full =
        tm.basis.lift(rom::invert_scaling(tm.scaling, roll.extrapolated_model_space));
    const std::size_t ext_cols = windows * tm.model.cfg.horizon;
    const std::size_t width = ext_start + ext_cols;

    rom::Matrix extended(tm.basis.full_dim(), pred.n_instances * width);
    for (std::size_t inst = 0; inst < pred.n_instances; ++inst) {
        for (std::size_t s = 0; s < ext_start; ++s)
            for (std::size_t i = 0; i < tm.basis.full_dim(); ++i)
                extended(i, inst * width + s) = pred.data(i, inst * pred.n_steps + s);
        for (std::size_t s = 0; s < ext_cols; ++s)
            for (std::size_t i = 0; i < tm.basis.full_dim(); ++i)
                extended(i, inst * width + ext_start + s) = ext_full(i, inst * ext_cols + s);
    }

    fs::create_directories(cfg.out_dir);
    rom::SnapshotMatrix es;
    es.n_dofs = tm.basis.n_dofs;
    es.n_channels = tm.basis.n_channels;
    es.n_instances = pred.n_instances;
    es.n_steps = width;
    es.data = extended;
    rom::write_snapshots((fs::path(cfg.out_dir) / "extended.snap").string(), es);
    std::printf("extended matrix: %zu instances x %zu steps (%zu extrapolated)\n",
                pred.n_instances, width, ext_cols);
    return 0;
}

int run_evaluate(const PipelineConfig& cfg, const std::string& approx_path,
                 const std::string& truth_path)
{
    const rom::SnapshotMatrix approx = rom::read_snapshots(approx_path);
    const rom::SnapshotMatrix truth = rom::read_snapshots(truth_path);
    if (approx.n_instances != truth.n_instances)
        throw std::runtime_error("evaluate: instance count mismatch");
    const std::size_t width = approx.n_steps;
    if (truth.n_steps < width)
        throw std::runtime_error("evaluate: ground truth shorter than the approximation");

    const std::size_t start = cfg.eval_start;
    if (start >= width)
        throw std::runtime_error("evaluate: empty evaluation window");
    const std::size_t len = width - start;
    rom::Matrix t_eval(truth.data.rows(), truth.n_instances * len);
    rom::Matrix a_eval(truth.data.rows(), truth.n_instances * len);
    for (std::size_t inst = 0; inst < truth.n_instances; ++inst)
        for (std::size_t s = 0; s < len; ++s)
            for (std::size_t i = 0; i < truth.data.rows(); ++i) {
                t_eval(i, inst * len + s) = truth.data(i, inst * truth.n_steps + start + s);
                a_eval(i, inst * len + s) = approx.data(i, inst * width + start + s);
            }

    rom::EvaluationReport rep;
    rep.eps_rel_value = rom::eps_rel(t_eval, a_eval, truth.n_instances, len);
    const rom::EpsKStats ek = rom::eps_k(t_eval, a_eval, truth.n_instances, len);
    rep.eps_k_mean = ek.mean;
    rep.eps_k_max = ek.max;
    const auto ci = rom::bootstrap_ci(ek.samples, cfg.bootstrap_level,
                                      cfg.bootstrap_resamples,
                                      rom::Rng::derive(cfg.seed, "bootstrap"));
    rep.ci_lo = ci.first;
    rep.ci_hi = ci.second;

    fs::create_directories(cfg.out_dir);
    std::ofstream os(fs::path(cfg.out_dir) / "report.json");
    os << rep.to_json() << "\n";
    std::printf("eps_rel %.6e  eps_k mean %.6e max %.6e  ci [%.6e, %.6e]\n",
                rep.eps_rel_value, rep.eps_k_mean, rep.eps_k_max, rep.ci_lo, rep.ci_hi);
    return 0;
}

int run_full_pipeline(const PipelineConfig& cfg)
{
    const rom::PipelineArtifacts art = rom::run_pipeline(cfg);
    std::printf("%s\n", art.report.to_json().c_str());
    std::printf("report written to %s/report.json\n", cfg.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"POD + LSTM reduced-order surrogate pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", data_dir;
    std::string ckpt_dir, params_path, prediction_path, truth_path, approx_path;
    std::uint64_t seed = 1;

    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed")->required();
    app.add_option("--out", out_dir, "output directory")->required();

    auto* gen = app.add_subcommand("generate-fom", "generate full-order snapshot data");
    auto* tmu = app.add_subcommand("train-mu", "train the parameter-to-sequence model");
    tmu->add_option("--data", data_dir, "directory with fom_* files (default: --out)");
    auto* tt = app.add_subcommand("train-t", "train the window forecaster");
    tt->add_option("--data", data_dir, "directory with fom_* files (default: --out)");
    auto* pre = app.add_subcommand("predict", "predict test trajectories from a checkpoint");
    pre->add_option("--checkpoint", ckpt_dir, "mu checkpoint directory")->required();
    pre->add_option("--params", params_path, "test parameter CSV")->required();
    auto* ext = app.add_subcommand("extrapolate", "extend a prediction in time");
    ext->add_option("--checkpoint", ckpt_dir, "t checkpoint directory")->required();
    ext->add_option("--prediction", prediction_path, "prediction snapshot file")->required();
    ext->add_option("--params", params_path, "test parameter CSV")->required();
    auto* eva = app.add_subcommand("evaluate", "compare an approximation against ground truth");
    eva->add_option("--approx", approx_path, "approximation snapshot file")->required();
    eva->add_option("--truth", truth_path, "ground-truth snapshot file")->required();
    auto* pip = app.add_subcommand("pipeline", "run the whole train-predict-extend-evaluate flow");

    CLI11_PARSE(app, argc, argv);

    try {
        const PipelineConfig cfg = load_config(config_path, seed, out_dir);
        if (gen->parsed())
            return run_generate_fom(cfg);
        if (tmu->parsed())
            return run_train_mu(cfg, data_dir);
        if (tt->parsed())
            return run_train_t(cfg, data_dir);
        if (pre->parsed())
            return run_predict(cfg, ckpt_dir, params_path);
        if (ext->parsed())
            return run_extrapolate(cfg, ckpt_dir, prediction_path, params_path);
        if (eva->parsed())
            return run_evaluate(cfg, approx_path, truth_path);
        if (pip->parsed())
            return run_full_pipeline(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
