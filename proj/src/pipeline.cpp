#include "rom/pipeline.hpp"

#include "rom/snapshot_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>

namespace rom {

namespace {

namespace fs = std::filesystem;

void check(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument("pipeline: " + what);
}

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("stage ") + name + ": " + e.what());
    }
}

Matrix column_range(const Matrix& m, std::size_t c0, std::size_t c1)
{
    Matrix out(m.rows(), c1 - c0);
    for (std::size_t j = c0; j < c1; ++j)
        for (std::size_t i = 0; i < m.rows(); ++i)
            out(i, j - c0) = m(i, j);
    return out;
}

} // namespace

void PipelineConfig::validate() const
{
    check(test_case == "lotka-volterra" || test_case == "adr" || test_case == "file",
          "unknown test case '" + test_case + "'");
    check(train_steps > 1, "train_steps too small");
    check(mu_model.seq_len > 0 && mu_model.seq_len < train_steps,
          "mu sequence length must lie in [1, train_steps)");
    if (train_t_model)
        check(t_model.past_len + t_model.horizon == mu_model.seq_len ||
                  t_model.past_len + t_model.horizon < train_steps,
              "t-model window does not fit the training trajectory");
    const std::size_t start = ext_start ? ext_start : train_steps;
    const std::size_t width = start + ext_windows * t_model.horizon;
    check(test_steps >= width, "test_steps shorter than the extended window");
    check(eval_start < width, "evaluation window is empty");
    if (ext_windows > 0)
        check(train_t_model, "extrapolation requires the forecast model");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j)
{
    PipelineConfig c;
    c.test_case = j.value("test_case", c.test_case);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);

    if (j.contains("fom")) {
        const auto& f = j["fom"];
        c.train_steps = f.value("train_steps", c.train_steps);
        c.test_steps = f.value("test_steps", c.test_steps);
        c.test_stride = f.value("test_stride", c.test_stride);
        c.lv.dt = f.value("lv_dt", c.lv.dt);
        c.adr.nx = f.value("adr_nx", c.adr.nx);
        c.adr.ny = f.value("adr_ny", c.adr.ny);
        c.adr.dt = f.value("adr_dt", c.adr.dt);
        c.adr.reaction = f.value("adr_reaction", c.adr.reaction);
        c.train_snapshots_path = f.value("train_snapshots", c.train_snapshots_path);
        c.train_params_path = f.value("train_params", c.train_params_path);
        c.test_snapshots_path = f.value("test_snapshots", c.test_snapshots_path);
        c.test_params_path = f.value("test_params", c.test_params_path);
    }
    if (j.contains("pod")) {
        const auto& p = j["pod"];
        c.pod_identity = p.value("identity", c.pod_identity);
        c.pod_modes = p.value("modes", c.pod_modes);
        c.pod_oversampling = p.value("oversampling", c.pod_oversampling);
        c.pod_power_iters = p.value("power_iters", c.pod_power_iters);
    }
    c.scaling = j.value("scaling", c.scaling);
    if (j.contains("mu_model"))
        c.mu_model = j["mu_model"].get<ParamSeqConfig>();
    if (j.contains("mu_train"))
        c.mu_train = j["mu_train"].get<TrainConfig>();
    c.train_t_model = j.value("train_t_model", c.train_t_model);
    if (j.contains("t_model"))
        c.t_model = j["t_model"].get<ForecastConfig>();
    if (j.contains("t_train"))
        c.t_train = j["t_train"].get<TrainConfig>();
    if (j.contains("extrapolation")) {
        const auto& e = j["extrapolation"];
        c.ext_start = e.value("start_step", c.ext_start);
        c.ext_windows = e.value("windows", c.ext_windows);
    }
    if (j.contains("evaluation")) {
        const auto& e = j["evaluation"];
        c.eval_start = e.value("start_step", c.eval_start);
        c.bootstrap_resamples = e.value("bootstrap_resamples", c.bootstrap_resamples);
        c.bootstrap_level = e.value("bootstrap_level", c.bootstrap_level);
        c.plot_dofs = e.value("plot_dofs", c.plot_dofs);
        c.plot_instance = e.value("plot_instance", c.plot_instance);
    }
    return c;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& c)
{
    nlohmann::json j;
    j["test_case"] = c.test_case;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["fom"] = {{"train_steps", c.train_steps},
                {"test_steps", c.test_steps},
                {"test_stride", c.test_stride},
                {"lv_dt", c.lv.dt},
                {"adr_nx", c.adr.nx},
                {"adr_ny", c.adr.ny},
                {"adr_dt", c.adr.dt},
                {"adr_reaction", c.adr.reaction},
                {"train_snapshots", c.train_snapshots_path},
                {"train_params", c.train_params_path},
                {"test_snapshots", c.test_snapshots_path},
                {"test_params", c.test_params_path}};
    j["pod"] = {{"identity", c.pod_identity},
                {"modes", c.pod_modes},
                {"oversampling", c.pod_oversampling},
                {"power_iters", c.pod_power_iters}};
    j["scaling"] = c.scaling;
    j["mu_model"] = c.mu_model;
    j["mu_train"] = c.mu_train;
    j["train_t_model"] = c.train_t_model;
    j["t_model"] = c.t_model;
    j["t_train"] = c.t_train;
    j["extrapolation"] = {{"start_step", c.ext_start}, {"windows", c.ext_windows}};
    j["evaluation"] = {{"start_step", c.eval_start},
                       {"bootstrap_resamples", c.bootstrap_resamples},
                       {"bootstrap_level", c.bootstrap_level},
                       {"plot_dofs", c.plot_dofs},
                       {"plot_instance", c.plot_instance}};
    return j;
}

FOMData pipeline_fom_data(const PipelineConfig& cfg)
{
    FOMData data;
    if (cfg.test_case == "lotka-volterra") {
        LVConfig lv = cfg.lv;
        std::vector<FOMSolution> train_parts;
        lv.n_steps = cfg.train_steps;
        for (double mu : lv_training_mus())
            train_parts.push_back(solve_lotka_volterra(lv, mu));
        data.train = concat_instances(train_parts);

        std::vector<FOMSolution> test_parts;
        lv.n_steps = cfg.test_steps;
        const auto test_mus = lv_test_mus();
        for (std::size_t i = 0; i < test_mus.size(); i += cfg.test_stride)
            test_parts.push_back(solve_lotka_volterra(lv, test_mus[i]));
        data.test = concat_instances(test_parts);
    } else if (cfg.test_case == "adr") {
        ADRConfig adr = cfg.adr;
        std::vector<FOMSolution> train_parts;
        adr.n_steps = cfg.train_steps;
        for (const auto& mu : adr_training_mus())
            train_parts.push_back(solve_adr(adr, mu));
        data.train = concat_instances(train_parts);

        std::vector<FOMSolution> test_parts;
        adr.n_steps = cfg.test_steps;
        const auto test_mus = adr_test_mus();
        for (std::size_t i = 0; i < test_mus.size(); i += cfg.test_stride)
            test_parts.push_back(solve_adr(adr, test_mus[i]));
        data.test = concat_instances(test_parts);
    } else {
        data.train.snapshots = read_snapshots(cfg.train_snapshots_path);
        data.train.params = read_params_csv(cfg.train_params_path, &data.train.n_mu);
        data.test.snapshots = read_snapshots(cfg.test_snapshots_path);
        data.test.params = read_params_csv(cfg.test_params_path, &data.test.n_mu);
        data.train.validate();
        data.test.validate();
        check(data.train.snapshots.n_steps == cfg.train_steps,
              "train snapshot file step count does not match train_steps");
        check(data.test.snapshots.n_steps == cfg.test_steps,
              "test snapshot file step count does not match test_steps");
    }
    return data;
}

ReducedTrainingData pipeline_reduce(const PipelineConfig& cfg, const FOMData& fom)
{
    ReducedTrainingData out;
    if (cfg.pod_identity) {
        out.basis = identity_basis(fom.train.snapshots.n_dofs, fom.train.snapshots.n_channels);
    } else {
        out.basis = compute_rpod_basis(fom.train.snapshots, cfg.pod_modes,
                                       cfg.pod_oversampling, cfg.pod_power_iters,
                                       Rng::derive(cfg.seed, "rpod"));
    }
    const Matrix reduced = out.basis.project(fom.train.snapshots.data);
    if (cfg.scaling)
        out.scaling = fit_scaling(reduced);
    out.reduced_model_space = apply_scaling(out.scaling, reduced);
    out.training_max_abs = out.reduced_model_space.max_abs();
    return out;
}

TimingStats single_step_baseline(const ParamSeqModel& m, const Matrix& test_params,
                                 std::size_t n_test, std::size_t n_steps)
{
    TimingStats stats;
    for (std::size_t inst = 0; inst < n_test; ++inst) {
        StopWatch watch;
        for (std::size_t step = 0; step < n_steps; ++step) {
            const Matrix t_mu = test_params.column(inst * n_steps + step);
            const Matrix latent = m.regress(t_mu);
            const std::vector<Matrix> one = m.decode_steps(latent, 1);
            (void)one;
        }
        stats.add(watch.seconds());
    }
    return stats;
}

PipelineArtifacts run_pipeline(const PipelineConfig& cfg)
{
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);

    {
        std::ofstream os(out / "config.json");
        os << pipeline_config_to_json(cfg).dump(2) << "\n";
    }

    FOMData fom = stage("fom", [&] { return pipeline_fom_data(cfg); });
    stage("fom-artifacts", [&] {
        write_snapshots((out / "fom_train.snap").string(), fom.train.snapshots);
        write_params_csv((out / "fom_train_params.csv").string(), fom.train.params);
        write_snapshots((out / "fom_test.snap").string(), fom.test.snapshots);
        write_params_csv((out / "fom_test_params.csv").string(), fom.test.params);
        return 0;
    });

    ReducedTrainingData red = stage("reduce", [&] { return pipeline_reduce(cfg, fom); });

    const std::size_t n_mu = fom.train.n_mu;
    const std::size_t n_train_inst = fom.train.snapshots.n_instances;

    // Shared window dataset (both models run on the same sliding windows).
    ParamSeqConfig mu_cfg = cfg.mu_model;
    mu_cfg.input_dim = red.basis.reduced_dim();
    mu_cfg.n_params = n_mu;
    mu_cfg.resolve();

    WindowDataset mu_ds = stage("windows", [&] {
        return build_window_dataset(red.reduced_model_space, fom.train.params,
                                    n_train_inst, cfg.train_steps, mu_cfg.seq_len);
    });

    PipelineArtifacts art;

    ParamSeqModel mu_model(mu_cfg, Rng::derive(cfg.seed, "mu-weights"));
    art.mu_history = stage("train-mu", [&] {
        TrainConfig tc = cfg.mu_train;
        tc.seed = Rng::derive(cfg.seed, "mu-train");
        return train_param_seq(mu_model, mu_ds, tc);
    });
    stage("save-mu", [&] {
        Checkpoint ck = make_mu_checkpoint(mu_model, red.basis, red.scaling,
                                           art.mu_history, cfg.seed);
        save_checkpoint((out / "mu_ckpt").string(), ck);
        return 0;
    });

    ForecastConfig t_cfg = cfg.t_model;
    ForecastModel t_fc;
    if (cfg.train_t_model) {
        t_cfg.input_dim = red.basis.reduced_dim();
        t_cfg.n_params = n_mu;
        t_cfg.resolve();
        const std::size_t t_window = t_cfg.past_len + t_cfg.horizon;
        const WindowDataset* t_ds = &mu_ds;
        WindowDataset t_ds_own;
        if (t_window != mu_cfg.seq_len) {
            t_ds_own = stage("windows-t", [&] {
                return build_window_dataset(red.reduced_model_space, fom.train.params,
                                            n_train_inst, cfg.train_steps, t_window);
            });
            t_ds = &t_ds_own;
        }
        t_fc = ForecastModel(t_cfg, Rng::derive(cfg.seed, "t-weights"));
        art.t_history = stage("train-t", [&] {
            TrainConfig tc = cfg.t_train;
            tc.seed = Rng::derive(cfg.seed, "t-train");
            return train_forecast(t_fc, *t_ds, tc);
        });
        stage("save-t", [&] {
            Checkpoint ck = make_t_checkpoint(t_fc, red.basis, red.scaling,
                                              art.t_history, cfg.seed);
            save_checkpoint((out / "t_ckpt").string(), ck);
            return 0;
        });
    }

    // Alg-2-style prediction over the training time window for every
    // held-out instance.
    const std::size_t n_test = fom.test.snapshots.n_instances;
    Matrix predict_params(1 + n_mu, n_test * cfg.train_steps);
    for (std::size_t inst = 0; inst < n_test; ++inst)
        for (std::size_t s = 0; s < cfg.train_steps; ++s)
            for (std::size_t r = 0; r < 1 + n_mu; ++r)
                predict_params(r, inst * cfg.train_steps + s) =
                    fom.test.params(r, inst * cfg.test_steps + s);

    ParamSeqPrediction pred = stage("predict", [&] {
        return predict_param_seq(mu_model, red.basis, red.scaling, predict_params,
                                 n_test, cfg.train_steps);
    });
    stage("save-prediction", [&] {
        SnapshotMatrix ps;
        ps.n_dofs = fom.test.snapshots.n_dofs;
        ps.n_channels = fom.test.snapshots.n_channels;
        ps.n_instances = n_test;
        ps.n_steps = cfg.train_steps;
        ps.data = pred.full;
        write_snapshots((out / "prediction.snap").string(), ps);
        return 0;
    });

    const std::size_t ext_start = cfg.ext_start ? cfg.ext_start : cfg.train_steps;
    const std::size_t width = ext_start + cfg.ext_windows * t_cfg.horizon;

    // Extended matrix: prediction columns [0, ext_start) then rollout.
    art.extended_full = Matrix(red.basis.full_dim(), n_test * width);
    for (std::size_t inst = 0; inst < n_test; ++inst)
        for (std::size_t s = 0; s < ext_start; ++s)
            for (std::size_t i = 0; i < red.basis.full_dim(); ++i)
                art.extended_full(i, inst * width + s) =
                    pred.full(i, inst * cfg.train_steps + s);

    RolloutResult roll;
    if (cfg.ext_windows > 0) {
        Matrix test_mus(n_mu, n_test);
        for (std::size_t inst = 0; inst < n_test; ++inst)
            for (std::size_t r = 0; r < n_mu; ++r)
                test_mus(r, inst) = fom.test.params(1 + r, inst * cfg.test_steps);
        roll = stage("extrapolate", [&] {
            return rollout_forecast(t_fc, pred.reduced_model_space, n_test,
                                    cfg.train_steps, test_mus, ext_start,
                                    cfg.ext_windows);
        });
        const Matrix ext_full = stage("lift-extrapolation", [&] {
            return red.basis.lift(invert_scaling(red.scaling, roll.extrapolated_model_space));
        });
        const std::size_t ext_cols = cfg.ext_windows * t_cfg.horizon;
        for (std::size_t inst = 0; inst < n_test; ++inst)
            for (std::size_t s = 0; s < ext_cols; ++s)
                for (std::size_t i = 0; i < red.basis.full_dim(); ++i)
                    art.extended_full(i, inst * width + ext_start + s) =
                        ext_full(i, inst * ext_cols + s);
    }
    stage("save-extended", [&] {
        SnapshotMatrix es;
        es.n_dofs = fom.test.snapshots.n_dofs;
        es.n_channels = fom.test.snapshots.n_channels;
        es.n_instances = n_test;
        es.n_steps = width;
        es.data = art.extended_full;
        write_snapshots((out / "extended.snap").string(), es);
        return 0;
    });

    // Ground truth aligned with the extended matrix.
    art.truth_full = Matrix(red.basis.full_dim(), n_test * width);
    for (std::size_t inst = 0; inst < n_test; ++inst)
        for (std::size_t s = 0; s < width; ++s)
            for (std::size_t i = 0; i < red.basis.full_dim(); ++i)
                art.truth_full(i, inst * width + s) =
                    fom.test.snapshots.data(i, inst * cfg.test_steps + s);
    art.n_test = n_test;
    art.extended_width = width;

    stage("evaluate", [&] {
        const std::size_t eval_len = width - cfg.eval_start;
        Matrix truth_eval(red.basis.full_dim(), n_test * eval_len);
        Matrix approx_eval(red.basis.full_dim(), n_test * eval_len);
        for (std::size_t inst = 0; inst < n_test; ++inst)
            for (std::size_t s = 0; s < eval_len; ++s)
                for (std::size_t i = 0; i < red.basis.full_dim(); ++i) {
                    truth_eval(i, inst * eval_len + s) =
                        art.truth_full(i, inst * width + cfg.eval_start + s);
                    approx_eval(i, inst * eval_len + s) =
                        art.extended_full(i, inst * width + cfg.eval_start + s);
                }
        EvaluationReport& rep = art.report;
        rep.eps_rel_value = eps_rel(truth_eval, approx_eval, n_test, eval_len);
        const EpsKStats ek = eps_k(truth_eval, approx_eval, n_test, eval_len);
        rep.eps_k_mean = ek.mean;
        rep.eps_k_max = ek.max;
        const auto ci = bootstrap_ci(ek.samples, cfg.bootstrap_level,
                                     cfg.bootstrap_resamples,
                                     Rng::derive(cfg.seed, "bootstrap"));
        rep.ci_lo = ci.first;
        rep.ci_hi = ci.second;
        rep.t_nn = pred.t_nn;
        rep.t_rec = pred.t_rec;
        rep.decoder_queries_per_instance = pred.decoder_queries_per_instance;
        rep.rollout_encoder_queries = cfg.ext_windows;
        rep.rollout_max_abs = roll.max_abs;
        rep.training_max_abs = red.training_max_abs;
        rep.rollout_divergence =
            cfg.ext_windows > 0 && roll.max_abs > 10.0 * red.training_max_abs;
        return 0;
    });

    stage("report-artifacts", [&] {
        std::ofstream os(out / "report.json");
        os << art.report.to_json() << "\n";

        auto dump_history = [&](const char* name, const TrainHistory& h) {
            std::ofstream hs(out / name);
            hs << "epoch,train_loss,val_loss\n";
            for (std::size_t e = 0; e < h.train_loss.size(); ++e)
                hs << e << "," << h.train_loss[e] << "," << h.val_loss[e] << "\n";
        };
        dump_history("history_mu.csv", art.mu_history);
        if (cfg.train_t_model)
            dump_history("history_t.csv", art.t_history);

        // Per-DOF series for the chosen instance: ground truth, the
        // prediction segment, the extrapolation segment, relative error.
        if (!cfg.plot_dofs.empty() && cfg.plot_instance < n_test) {
            const std::size_t inst = cfg.plot_instance;
            std::vector<double> times(width);
            for (std::size_t s = 0; s < width; ++s)
                times[s] = fom.test.params(0, inst * cfg.test_steps + s);
            double den = 0.0;
            for (std::size_t s = 0; s < width; ++s)
                for (std::size_t i = 0; i < red.basis.full_dim(); ++i) {
                    const double u = art.truth_full(i, inst * width + s);
                    den += u * u;
                }
            den = std::sqrt(den / static_cast<double>(width));
            const double nan = std::numeric_limits<double>::quiet_NaN();
            for (std::size_t dof : cfg.plot_dofs) {
                if (dof >= red.basis.full_dim())
                    continue;
                std::vector<std::vector<double>> series(4, std::vector<double>(width, nan));
                for (std::size_t s = 0; s < width; ++s) {
                    const double truth = art.truth_full(dof, inst * width + s);
                    const double rom = art.extended_full(dof, inst * width + s);
                    series[0][s] = truth;
                    if (s < ext_start)
                        series[1][s] = rom;
                    else
                        series[2][s] = rom;
                    series[3][s] = std::fabs(truth - rom) / den;
                }
                write_plot_csv((out / ("plot_dof" + std::to_string(dof) + ".csv")).string(),
                               times, {"fom", "prediction", "extrapolation", "rel_error"},
                               series);
            }
        }
        return 0;
    });

    return art;
}

} // namespace rom
