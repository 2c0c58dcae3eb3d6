#include "rom/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rom::nn {

namespace {

void check(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("nn: ") + what);
}

void apply_activation(Activation act, Matrix& m)
{
    switch (act) {
    case Activation::linear:
        return;
    case Activation::tanh: {
        double* p = m.data();
        for (std::size_t i = 0, n = m.size(); i < n; ++i)
            p[i] = std::tanh(p[i]);
        return;
    }
    case Activation::sigmoid: {
        double* p = m.data();
        for (std::size_t i = 0, n = m.size(); i < n; ++i)
            p[i] = sigmoid_scalar(p[i]);
        return;
    }
    case Activation::elu: {
        double* p = m.data();
        for (std::size_t i = 0, n = m.size(); i < n; ++i)
            p[i] = elu_scalar(p[i]);
        return;
    }
    }
}

} // namespace

const char* activation_name(Activation a)
{
    switch (a) {
    case Activation::linear: return "linear";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::elu: return "elu";
    }
    return "linear";
}

Activation activation_from_name(const std::string& name)
{
    if (name == "linear") return Activation::linear;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "elu") return Activation::elu;
    throw std::invalid_argument("unknown activation: " + name);
}

Matrix dense_forward(const DenseLayer& layer, const Matrix& x)
{
    check(x.rows() == layer.in_dim(), "dense_forward input dimension");
    Matrix y;
    matmul(layer.weights, x, y);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double* row = y.row(i);
        const double bi = layer.bias(i, 0);
        for (std::size_t j = 0; j < y.cols(); ++j)
            row[j] += bi;
    }
    apply_activation(layer.activation, y);
    return y;
}

LSTMCellParams::LSTMCellParams(std::size_t hidden, std::size_t input)
    : W(4 * hidden, input), U(4 * hidden, hidden), b(4 * hidden, 1)
{
}

Matrix LSTMCellParams::gate_weights(Gate g) const
{
    const std::size_t h = hidden_dim();
    Matrix out(h, input_dim());
    std::memcpy(out.data(), W.row(static_cast<std::size_t>(g) * h),
                out.size() * sizeof(double));
    return out;
}

Matrix LSTMCellParams::gate_recurrent(Gate g) const
{
    const std::size_t h = hidden_dim();
    Matrix out(h, h);
    std::memcpy(out.data(), U.row(static_cast<std::size_t>(g) * h),
                out.size() * sizeof(double));
    return out;
}

Matrix LSTMCellParams::gate_bias(Gate g) const
{
    const std::size_t h = hidden_dim();
    Matrix out(h, 1);
    std::memcpy(out.data(), b.row(static_cast<std::size_t>(g) * h),
                out.size() * sizeof(double));
    return out;
}

void LSTMCellParams::set_gate_weights(Gate g, const Matrix& w)
{
    const std::size_t h = hidden_dim();
    check(w.rows() == h && w.cols() == input_dim(), "gate weight shape");
    std::memcpy(W.row(static_cast<std::size_t>(g) * h), w.data(),
                w.size() * sizeof(double));
}

void LSTMCellParams::set_gate_recurrent(Gate g, const Matrix& u)
{
    const std::size_t h = hidden_dim();
    check(u.rows() == h && u.cols() == h, "gate recurrent shape");
    std::memcpy(U.row(static_cast<std::size_t>(g) * h), u.data(),
                u.size() * sizeof(double));
}

void LSTMCellParams::set_gate_bias(Gate g, const Matrix& bias)
{
    const std::size_t h = hidden_dim();
    check(bias.rows() == h && bias.cols() == 1, "gate bias shape");
    std::memcpy(b.row(static_cast<std::size_t>(g) * h), bias.data(),
                bias.size() * sizeof(double));
}

LSTMState lstm_cell_step(const LSTMCellParams& p, const Matrix& x, const LSTMState& s)
{
    const std::size_t h = p.hidden_dim();
    check(x.rows() == p.input_dim(), "lstm_cell_step input dimension");
    check(s.h.rows() == h && s.c.rows() == h, "lstm_cell_step state dimension");
    check(s.h.cols() == x.cols() && s.c.cols() == x.cols(), "lstm_cell_step batch mismatch");

    Matrix pre;
    matmul(p.W, x, pre);
    matmul_acc(p.U, s.h, pre);
    const std::size_t batch = x.cols();
    for (std::size_t i = 0; i < 4 * h; ++i) {
        double* row = pre.row(i);
        const double bi = p.b(i, 0);
        for (std::size_t j = 0; j < batch; ++j)
            row[j] += bi;
    }

    LSTMState out(h, batch);
    for (std::size_t i = 0; i < h; ++i) {
        const double* gi = pre.row(i);
        const double* gf = pre.row(h + i);
        const double* gg = pre.row(2 * h + i);
        const double* go = pre.row(3 * h + i);
        const double* cj = s.c.row(i);
        double* co = out.c.row(i);
        double* ho = out.h.row(i);
        for (std::size_t j = 0; j < batch; ++j) {
            const double ig = sigmoid_scalar(gi[j]);
            const double fg = sigmoid_scalar(gf[j]);
            const double gg_ = std::tanh(gg[j]);
            const double og = sigmoid_scalar(go[j]);
            co[j] = fg * cj[j] + ig * gg_;
            ho[j] = og * std::tanh(co[j]);
        }
    }
    return out;
}

LSTMSequenceResult lstm_sequence_forward(const std::vector<LSTMCellParams>& stack,
                                         const std::vector<Matrix>& sequence,
                                         const std::vector<LSTMState>* init)
{
    check(!stack.empty(), "lstm_sequence_forward: empty stack");
    check(!sequence.empty(), "lstm_sequence_forward: empty sequence");
    const std::size_t batch = sequence.front().cols();

    std::vector<LSTMState> states;
    states.reserve(stack.size());
    if (init) {
        check(init->size() == stack.size(), "lstm_sequence_forward: init size");
        states = *init;
    } else {
        for (const auto& cell : stack)
            states.emplace_back(cell.hidden_dim(), batch);
    }

    LSTMSequenceResult result;
    result.outputs.reserve(sequence.size());
    for (const Matrix& x : sequence) {
        const Matrix* input = &x;
        for (std::size_t c = 0; c < stack.size(); ++c) {
            states[c] = lstm_cell_step(stack[c], *input, states[c]);
            input = &states[c].h;
        }
        result.outputs.push_back(states.back().h);
    }
    result.finals = std::move(states);
    return result;
}

DenseVars lift(Tape& tape, const DenseLayer& layer)
{
    return DenseVars{tape.leaf(layer.weights), tape.leaf(layer.bias), layer.activation};
}

Var dense_forward(Tape& tape, const DenseVars& layer, Var x)
{
    Var y = tape.affine(layer.W, x, layer.b);
    switch (layer.activation) {
    case Activation::linear: return y;
    case Activation::tanh: return tape.tanh(y);
    case Activation::sigmoid: return tape.sigmoid(y);
    case Activation::elu: return tape.elu(y);
    }
    return y;
}

LSTMVars lift(Tape& tape, const LSTMCellParams& p)
{
    return LSTMVars{tape.leaf(p.W), tape.leaf(p.U), tape.leaf(p.b), p.hidden_dim()};
}

LSTMStateVar lstm_cell_step(Tape& tape, const LSTMVars& p, Var x, const LSTMStateVar& s)
{
    const std::size_t h = p.hidden;
    Var pre = tape.affine2(p.W, x, p.U, s.h, p.b);
    Var ig = tape.sigmoid(tape.slice_rows(pre, 0, h));
    Var fg = tape.sigmoid(tape.slice_rows(pre, h, 2 * h));
    Var gg = tape.tanh(tape.slice_rows(pre, 2 * h, 3 * h));
    Var og = tape.sigmoid(tape.slice_rows(pre, 3 * h, 4 * h));
    Var c_new = tape.hadamard_sum(fg, s.c, ig, gg);
    Var h_new = tape.hadamard(og, tape.tanh(c_new));
    return LSTMStateVar{h_new, c_new};
}

void AdamState::init(const std::vector<ParamRef>& params)
{
    t = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const auto& p : params) {
        m.emplace_back(p.value->rows(), p.value->cols());
        v.emplace_back(p.value->rows(), p.value->cols());
    }
}

void AdamState::step(const std::vector<ParamRef>& params, const std::vector<Matrix>& grads)
{
    check(params.size() == grads.size() && params.size() == m.size(),
          "adam: parameter/gradient count mismatch");
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!grads[k].all_finite())
            throw std::runtime_error("adam: non-finite gradient for parameter '" +
                                     params[k].name + "' at step " + std::to_string(t + 1));
    }
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& theta = *params[k].value;
        const Matrix& g = grads[k];
        check(theta.rows() == g.rows() && theta.cols() == g.cols(), "adam: gradient shape");
        double* pm = m[k].data();
        double* pv = v[k].data();
        double* pt = theta.data();
        const double* pg = g.data();
        for (std::size_t i = 0, n = theta.size(); i < n; ++i) {
            pm[i] = cfg.beta1 * pm[i] + (1.0 - cfg.beta1) * pg[i];
            pv[i] = cfg.beta2 * pv[i] + (1.0 - cfg.beta2) * pg[i] * pg[i];
            const double mhat = pm[i] / bc1;
            const double vhat = pv[i] / bc2;
            pt[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
        }
    }
}

void glorot_uniform(Matrix& w, std::size_t fan_in, std::size_t fan_out, Rng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    double* p = w.data();
    for (std::size_t i = 0, n = w.size(); i < n; ++i)
        p[i] = rng.uniform(-limit, limit);
}

Matrix random_orthogonal(std::size_t n, Rng& rng)
{
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            g(i, j) = rng.normal();
    return householder_q(g);
}

DenseLayer make_dense(std::size_t out, std::size_t in, Activation act, Rng& rng)
{
    DenseLayer layer;
    layer.weights = Matrix(out, in);
    layer.bias = Matrix(out, 1);
    layer.activation = act;
    glorot_uniform(layer.weights, in, out, rng);
    return layer;
}

LSTMCellParams make_lstm_cell(std::size_t hidden, std::size_t input, Rng& rng)
{
    LSTMCellParams p(hidden, input);
    glorot_uniform(p.W, input, hidden, rng);
    for (std::size_t g = 0; g < 4; ++g) {
        const Matrix q = random_orthogonal(hidden, rng);
        for (std::size_t i = 0; i < hidden; ++i)
            for (std::size_t j = 0; j < hidden; ++j)
                p.U(g * hidden + i, j) = q(i, j);
    }
    // Forget-gate bias starts at 1 so early training does not erase state.
    for (std::size_t i = 0; i < hidden; ++i)
        p.b(hidden + i, 0) = 1.0;
    return p;
}

} // namespace rom::nn
