#ifndef ROM_NN_HPP
#define ROM_NN_HPP

#include "rom/matrix.hpp"
#include "rom/rng.hpp"
#include "rom/tape.hpp"

#include <string>
#include <vector>

namespace rom::nn {

enum class Activation : std::uint8_t { linear, tanh, sigmoid, elu };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
    Matrix weights; // out x in
    Matrix bias;    // out x 1
    Activation activation = Activation::linear;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }
};

// x may carry several columns (a batch); the layer applies to each column.
Matrix dense_forward(const DenseLayer& layer, const Matrix& x);

enum class Gate : std::size_t { input = 0, forget = 1, cell = 2, output = 3 };

// Standard forget-gate LSTM cell. The four gates are stored packed as
// row blocks (input, forget, cell, output) of W (4h x in), U (4h x h)
// and b (4h x 1) so that one preactivation product serves all gates.
struct LSTMCellParams {
    Matrix W; // 4h x in
    Matrix U; // 4h x h
    Matrix b; // 4h x 1

    LSTMCellParams() = default;
    LSTMCellParams(std::size_t hidden, std::size_t input);

    std::size_t hidden_dim() const { return U.cols(); }
    std::size_t input_dim() const { return W.cols(); }

    // Per-gate views (copies) of the packed parameters.
    Matrix gate_weights(Gate g) const;
    Matrix gate_recurrent(Gate g) const;
    Matrix gate_bias(Gate g) const;
    void set_gate_weights(Gate g, const Matrix& w);
    void set_gate_recurrent(Gate g, const Matrix& u);
    void set_gate_bias(Gate g, const Matrix& bias);
};

struct LSTMState {
    Matrix h; // hidden x batch
    Matrix c; // hidden x batch

    LSTMState() = default;
    LSTMState(std::size_t hidden, std::size_t batch)
        : h(hidden, batch), c(hidden, batch) {}
};

// One step: i = sig(Wi x + Ui h + bi), f = sig(...), g = tanh(...),
// o = sig(...); c' = f.*c + i.*g; h' = o.*tanh(c').
LSTMState lstm_cell_step(const LSTMCellParams& p, const Matrix& x, const LSTMState& s);

struct LSTMSequenceResult {
    std::vector<Matrix> outputs;   // top-cell output at each step
    std::vector<LSTMState> finals; // final state per cell
};

// Runs a stack of cells over a sequence; cell k+1 consumes the per-step
// outputs of cell k. States start at zero unless given.
LSTMSequenceResult lstm_sequence_forward(const std::vector<LSTMCellParams>& stack,
                                         const std::vector<Matrix>& sequence,
                                         const std::vector<LSTMState>* init = nullptr);

// ---- traced (tape) counterparts -------------------------------------

struct DenseVars {
    Var W, b;
    Activation activation = Activation::linear;
};
DenseVars lift(Tape& tape, const DenseLayer& layer);
Var dense_forward(Tape& tape, const DenseVars& layer, Var x);

struct LSTMVars {
    Var W, U, b;
    std::size_t hidden = 0;
};
LSTMVars lift(Tape& tape, const LSTMCellParams& p);

struct LSTMStateVar {
    Var h, c;
};
LSTMStateVar lstm_cell_step(Tape& tape, const LSTMVars& p, Var x, const LSTMStateVar& s);

// ---- parameter bookkeeping ------------------------------------------

struct ParamRef {
    std::string name;
    Matrix* value = nullptr;
};

// Matches gradients (read from tape leaves) to parameters by position.
struct GradSink {
    std::vector<Var> leaves;
};

// Adam optimizer with bias correction.
struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::uint64_t t = 0;
    std::vector<Matrix> m, v;

    void init(const std::vector<ParamRef>& params);
    // One update step. Throws on non-finite gradients, reporting the
    // offending parameter name.
    void step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads);
};

// ---- initialization ---------------------------------------------------

// Glorot-uniform fill: U(-L, L) with L = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng);
// Orthonormal square matrix from the QR of a Gaussian sample.
Matrix random_orthogonal(std::size_t n, Rng& rng);

DenseLayer make_dense(std::size_t out, std::size_t in, Activation act, Rng& rng);
// Glorot input weights, orthogonal recurrent weights per gate,
// forget-gate bias 1, other biases 0.
LSTMCellParams make_lstm_cell(std::size_t hidden, std::size_t input, Rng& rng);

} // namespace rom::nn

#endif
