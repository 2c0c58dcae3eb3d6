#ifndef ROM_PIPELINE_HPP
#define ROM_PIPELINE_HPP

#include "rom/checkpoint.hpp"
#include "rom/fom.hpp"
#include "rom/forecast_model.hpp"
#include "rom/metrics.hpp"
#include "rom/param_seq_model.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace rom {

// End-to-end configuration. One master seed fans out to the basis
// sketch, weight initialization, dataset shuffling and the bootstrap
// through fixed derivation tags, so every stage is independently
// reproducible.
struct PipelineConfig {
    std::string test_case = "lotka-volterra"; // "lotka-volterra", "adr", "file"
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    // -- full-order data ---------------------------------------------------
    LVConfig lv;
    ADRConfig adr;
    std::size_t train_steps = 100; // N_t of the training window
    std::size_t test_steps = 100;  // columns per test instance (>= extended width)
    std::size_t test_stride = 1;   // keep every k-th held-out instance
    // "file" ingestion paths
    std::string train_snapshots_path, train_params_path;
    std::string test_snapshots_path, test_params_path;

    // -- reduction -----------------------------------------------------------
    bool pod_identity = false;
    std::size_t pod_modes = 64;
    std::size_t pod_oversampling = 10;
    std::size_t pod_power_iters = 2;
    bool scaling = false;

    // -- models ---------------------------------------------------------------
    ParamSeqConfig mu_model;
    TrainConfig mu_train;
    bool train_t_model = true;
    ForecastConfig t_model;
    TrainConfig t_train;

    // -- extrapolation (0 windows = prediction only) -----------------------
    std::size_t ext_start = 0;   // 0 = train_steps
    std::size_t ext_windows = 0;

    // -- evaluation --------------------------------------------------------
    std::size_t eval_start = 0;  // first evaluated column of the extended window
    std::size_t bootstrap_resamples = 10000;
    double bootstrap_level = 0.95;
    std::vector<std::size_t> plot_dofs;
    std::size_t plot_instance = 0;

    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& cfg);

struct FOMData {
    FOMSolution train;
    FOMSolution test;
};

// Stage 0: produce (or ingest) full-order data.
FOMData pipeline_fom_data(const PipelineConfig& cfg);

// Stage 1 helpers shared by the train subcommands: basis + scaling +
// reduced model-space matrix of the training set, all deterministic
// under cfg.seed.
struct ReducedTrainingData {
    PODBasis basis;
    ScalingRecord scaling;
    Matrix reduced_model_space; // scaled reduced training trajectories
    double training_max_abs = 0.0;
};
ReducedTrainingData pipeline_reduce(const PipelineConfig& cfg, const FOMData& fom);

struct PipelineArtifacts {
    EvaluationReport report;
    TrainHistory mu_history;
    TrainHistory t_history;
    Matrix extended_full;  // per-instance width ext_start + ext_windows*horizon
    Matrix truth_full;     // aligned ground truth (same width)
    std::size_t n_test = 0;
    std::size_t extended_width = 0;
};

// Full run: reduce, train both models, predict, extrapolate, concatenate,
// evaluate, and write artifacts (checkpoints, snapshots, report, plot
// data) under cfg.out_dir. Any stage failure is rethrown with the stage
// name in the message.
PipelineArtifacts run_pipeline(const PipelineConfig& cfg);

// Baseline timing pattern for the efficiency comparison: answers the same
// prediction queries one time step per decoder call (regress + one-step
// decode each), accumulating per-instance network time.
TimingStats single_step_baseline(const ParamSeqModel& m, const Matrix& test_params,
                                 std::size_t n_test, std::size_t n_steps);

} // namespace rom

#endif
