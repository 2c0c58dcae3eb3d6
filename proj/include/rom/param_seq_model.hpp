#ifndef ROM_PARAM_SEQ_MODEL_HPP
#define ROM_PARAM_SEQ_MODEL_HPP

#include "rom/dataset.hpp"
#include "rom/nn.hpp"
#include "rom/pod.hpp"
#include "rom/timing.hpp"

#include <cstdint>
#include <vector>

namespace rom {

// Affine map of regressor inputs into [0, 1], with ranges frozen from
// training data. Degenerate (constant) inputs map to 0.
struct InputScaler {
    std::vector<double> lo, hi;
    Matrix apply(const Matrix& raw) const;
};
InputScaler fit_input_scaler(const WindowTensor& params, std::size_t row_begin,
                             std::size_t row_end);

// Sequence model mapping (start time, parameters) to a window of reduced
// states. Three parameter groups:
//   encoder    - optional time-distributed dense reducers + stacked LSTM
//                cells; the final top-cell hidden state (optionally through
//                a dense head) is the latent target used only in training;
//   regressor  - dense network (t, mu) -> latent;
//   decoder    - dense expansion of the latent, which seeds (h, c) of the
//                first decoder cell and is repeated as the input at every
//                step, plus a shared dense output layer per step.
struct ParamSeqConfig {
    std::size_t input_dim = 0;  // reduced state dimension
    std::size_t latent_dim = 0;
    std::size_t seq_len = 0;
    std::size_t n_params = 0;
    std::vector<std::size_t> reducer_dims; // empty = feed reduced states directly
    std::size_t enc_depth = 1;
    std::size_t enc_hidden = 0; // 0 = latent_dim
    std::vector<std::size_t> regressor_hidden{50, 50};
    std::size_t dec_depth = 1;
    std::size_t dec_hidden = 0; // 0 = latent_dim

    void resolve(); // replace 0 defaults, validate
};

struct ParamSeqModel {
    ParamSeqConfig cfg;

    std::vector<nn::DenseLayer> reducers;
    std::vector<nn::LSTMCellParams> enc_cells;
    bool has_enc_head = false;
    nn::DenseLayer enc_head;

    std::vector<nn::DenseLayer> regressor;

    nn::DenseLayer dec_expander;
    std::vector<nn::LSTMCellParams> dec_cells;
    nn::DenseLayer dec_out;

    InputScaler scaler;

    ParamSeqModel() = default;
    ParamSeqModel(const ParamSeqConfig& config, std::uint64_t seed);

    // All columns are batch entries.
    Matrix encode(const std::vector<Matrix>& window) const;      // latent x B
    Matrix regress(const Matrix& t_mu_raw) const;                // latent x B
    std::vector<Matrix> decode(const Matrix& latent) const;      // seq_len steps
    // First `count` decoder steps (count <= seq_len); the single-step
    // form prices per-time-step query patterns in timing comparisons.
    std::vector<Matrix> decode_steps(const Matrix& latent, std::size_t count) const;

    std::vector<nn::ParamRef> parameters();
    std::vector<nn::ParamRef> encoder_parameters();
    std::vector<nn::ParamRef> regressor_parameters();
    std::vector<nn::ParamRef> decoder_parameters();
};

struct MuLossBreakdown {
    double recon = 0.0;      // mean over sequences of the squared window error
    double latent_fit = 0.0; // mean over sequences of |z_enc - z_regressor|^2
    double weight = 0.0;
    double total = 0.0;      // weight/2 * recon + (1-weight)/2 * latent_fit
};

struct MuBatch {
    std::vector<Matrix> steps; // seq_len matrices, input_dim x B
    Matrix inputs;             // (1 + n_params) x B raw (t_i, mu)
};
MuBatch gather_mu_batch(const WindowDataset& ds, const std::vector<std::size_t>& idxs);

MuLossBreakdown mu_loss(const ParamSeqModel& m, const MuBatch& batch, double recon_weight);

// Traced forward + reverse sweep; gradients come back aligned with
// ParamSeqModel::parameters().
MuLossBreakdown mu_loss_and_gradients(ParamSeqModel& m, const MuBatch& batch,
                                      double recon_weight, std::vector<Matrix>& grads);

struct TrainConfig {
    std::size_t max_epochs = 1000;
    std::size_t patience = 50;
    bool early_stop = true;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    double val_fraction = 0.2;
    double recon_weight = 0.9;
    std::uint64_t seed = 1;
    bool verbose = false;
    std::size_t log_every = 25;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::size_t best_epoch = 0; // index into the loss vectors
    double best_val = 0.0;
    double seconds = 0.0;
};

// Minibatch Adam with validation-based early stopping; the best
// validation checkpoint is restored before returning.
TrainHistory train_param_seq(ParamSeqModel& m, const WindowDataset& ds,
                             const TrainConfig& cfg);

struct ParamSeqPrediction {
    Matrix reduced_model_space; // scaled reduced coordinates, per-instance blocks
    Matrix full;                // lifted (and de-scaled) full-order matrix
    std::size_t decoder_queries_per_instance = 0;
    TimingStats t_nn;  // network forward time per instance
    TimingStats t_rec; // network + de-scale + lift time per instance
};

// Sequence prediction over a time grid: one regress+decode query per
// window of seq_len steps (ceil(n_steps / seq_len) queries per instance;
// a shorter final window is started early and overlapping columns are
// dropped). test_params columns are instance-major (t, mu) pairs.
ParamSeqPrediction predict_param_seq(const ParamSeqModel& m, const PODBasis& basis,
                                     const ScalingRecord& scaling,
                                     const Matrix& test_params, std::size_t n_test,
                                     std::size_t n_steps);

} // namespace rom

#endif
