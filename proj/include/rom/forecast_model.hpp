#ifndef ROM_FORECAST_MODEL_HPP
#define ROM_FORECAST_MODEL_HPP

#include "rom/param_seq_model.hpp"

#include <functional>

namespace rom {

// Window-to-window forecaster: an LSTM encoder summarizes the last
// past_len reduced states, a dense net embeds the parameter vector, a
// merge net fuses the two into the decoder start state, and an LSTM
// decoder emits horizon future steps (same repeat-input decoding scheme
// as the sequence model). Time stamps are not inputs; forecasts are
// invariant under time translation by construction.
struct ForecastConfig {
    std::size_t input_dim = 0;
    std::size_t state_dim = 0; // encoder final-state width and decoder hidden width
    std::size_t past_len = 0;
    std::size_t horizon = 0;
    std::size_t n_params = 0;
    std::size_t enc_depth = 1;
    std::size_t dec_depth = 1;
    std::vector<std::size_t> param_net_hidden; // widths before the embedding output
    std::size_t param_embed = 0;               // 0 = state_dim
    std::vector<std::size_t> merge_hidden;     // widths before the merge output

    void resolve();
};

struct ForecastModel {
    ForecastConfig cfg;

    std::vector<nn::LSTMCellParams> enc_cells;
    std::vector<nn::DenseLayer> param_net; // ELU throughout
    std::vector<nn::DenseLayer> merge_net; // ELU hidden, linear output
    std::vector<nn::LSTMCellParams> dec_cells;
    nn::DenseLayer dec_out;

    InputScaler scaler; // parameter rows only

    ForecastModel() = default;
    ForecastModel(const ForecastConfig& config, std::uint64_t seed);

    Matrix encode_past(const std::vector<Matrix>& past) const;      // state x B
    Matrix merged_state(const Matrix& h_enc, const Matrix& mu_raw) const;
    std::vector<Matrix> decode(const Matrix& state) const;          // horizon steps

    // Full chain: past window (past_len matrices input_dim x B) plus raw
    // parameters (n_params x B) to horizon forecast steps.
    std::vector<Matrix> forward(const std::vector<Matrix>& past, const Matrix& mu_raw) const;

    std::vector<nn::ParamRef> parameters();
};

struct ForecastBatch {
    std::vector<Matrix> past;    // past_len matrices, input_dim x B
    std::vector<Matrix> horizon; // horizon matrices, input_dim x B
    Matrix mu;                   // n_params x B raw
};
ForecastBatch gather_forecast_batch(const WindowDataset& ds, const ForecastConfig& cfg,
                                    const std::vector<std::size_t>& idxs);

// Mean over the batch of the per-sequence MSE (sum of squared errors over
// the horizon window divided by input_dim * horizon).
double forecast_loss(const ForecastModel& m, const ForecastBatch& batch);
double forecast_loss_and_gradients(ForecastModel& m, const ForecastBatch& batch,
                                   std::vector<Matrix>& grads);

TrainHistory train_forecast(ForecastModel& m, const WindowDataset& ds, const TrainConfig& cfg);

// Observer for rollout diagnostics: (instance, iteration, encoder window).
using RolloutCapture = std::function<void(std::size_t, std::size_t, const Matrix&)>;

struct RolloutResult {
    // Extrapolated block only, per-instance column groups of width
    // n_windows * horizon, in model (scaled reduced) space.
    Matrix extrapolated_model_space;
    double max_abs = 0.0;          // over every buffer entry touched
    std::size_t encoder_queries = 0;
    TimingStats t_nn;
};

// Autoregressive extrapolation. reduced_model_space holds per-instance
// blocks of cols_per_instance reduced columns; the buffer seeds from the
// past_len columns before ext_start and each iteration appends horizon
// forecast steps, re-encoding the latest past_len buffer columns.
RolloutResult rollout_forecast(const ForecastModel& m, const Matrix& reduced_model_space,
                               std::size_t n_test, std::size_t cols_per_instance,
                               const Matrix& test_mus, // n_params x n_test
                               std::size_t ext_start, std::size_t n_windows,
                               const RolloutCapture* capture = nullptr);

} // namespace rom

#endif
