#include "rom/param_seq_model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rom {

namespace {

void check(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument("param_seq_model: " + what);
}

} // namespace

Matrix InputScaler::apply(const Matrix& raw) const
{
    check(raw.rows() == lo.size(), "input scaler row mismatch");
    Matrix out = raw;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double span = hi[i] - lo[i];
        double* row = out.row(i);
        if (span == 0.0) {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = 0.0;
        } else {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = (row[j] - lo[i]) / span;
        }
    }
    return out;
}

InputScaler fit_input_scaler(const WindowTensor& params, std::size_t row_begin,
                             std::size_t row_end)
{
    check(row_begin < row_end && row_end <= params.dim, "input scaler row range");
    InputScaler s;
    s.lo.assign(row_end - row_begin, std::numeric_limits<double>::infinity());
    s.hi.assign(row_end - row_begin, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < params.n_seq; ++i) {
        for (std::size_t k = 0; k < params.len; ++k) {
            for (std::size_t r = row_begin; r < row_end; ++r) {
                const double v = params.at(i, r, k);
                auto& lo = s.lo[r - row_begin];
                auto& hi = s.hi[r - row_begin];
                if (v < lo)
                    lo = v;
                if (v > hi)
                    hi = v;
            }
        }
    }
    return s;
}

void ParamSeqConfig::resolve()
{
    check(input_dim > 0 && latent_dim > 0 && seq_len > 0, "zero model dimension");
    check(enc_depth >= 1 && dec_depth >= 1, "need at least one cell per side");
    if (enc_hidden == 0)
        enc_hidden = latent_dim;
    if (dec_hidden == 0)
        dec_hidden = latent_dim;
}

ParamSeqModel::ParamSeqModel(const ParamSeqConfig& config, std::uint64_t seed)
    : cfg(config)
{
    cfg.resolve();
    Rng rng(Rng::derive(seed, "param-seq-init"));

    std::size_t enc_in = cfg.input_dim;
    for (std::size_t w : cfg.reducer_dims) {
        reducers.push_back(nn::make_dense(w, enc_in, nn::Activation::elu, rng));
        enc_in = w;
    }
    for (std::size_t c = 0; c < cfg.enc_depth; ++c) {
        enc_cells.push_back(nn::make_lstm_cell(cfg.enc_hidden, c == 0 ? enc_in : cfg.enc_hidden, rng));
    }
    has_enc_head = (cfg.enc_hidden != cfg.latent_dim);
    if (has_enc_head)
        enc_head = nn::make_dense(cfg.latent_dim, cfg.enc_hidden, nn::Activation::linear, rng);

    std::size_t reg_in = 1 + cfg.n_params;
    for (std::size_t w : cfg.regressor_hidden) {
        regressor.push_back(nn::make_dense(w, reg_in, nn::Activation::elu, rng));
        reg_in = w;
    }
    regressor.push_back(nn::make_dense(cfg.latent_dim, reg_in, nn::Activation::linear, rng));

    dec_expander = nn::make_dense(cfg.dec_hidden, cfg.latent_dim, nn::Activation::linear, rng);
    for (std::size_t c = 0; c < cfg.dec_depth; ++c)
        dec_cells.push_back(nn::make_lstm_cell(cfg.dec_hidden, cfg.dec_hidden, rng));
    dec_out = nn::make_dense(cfg.input_dim, cfg.dec_hidden, nn::Activation::linear, rng);

    scaler.lo.assign(1 + cfg.n_params, 0.0);
    scaler.hi.assign(1 + cfg.n_params, 1.0);
}

Matrix ParamSeqModel::encode(const std::vector<Matrix>& window) const
{
    check(window.size() == cfg.seq_len, "encode: wrong sequence length");
    const std::size_t batch = window.front().cols();

    std::vector<Matrix> steps;
    steps.reserve(window.size());
    for (const Matrix& x : window) {
        check(x.rows() == cfg.input_dim && x.cols() == batch, "encode: step shape");
        Matrix r = x;
        for (const auto& red : reducers)
            r = nn::dense_forward(red, r);
        steps.push_back(std::move(r));
    }
    const nn::LSTMSequenceResult res = nn::lstm_sequence_forward(enc_cells, steps);
    Matrix z = res.finals.back().h;
    if (has_enc_head)
        z = nn::dense_forward(enc_head, z);
    return z;
}

Matrix ParamSeqModel::regress(const Matrix& t_mu_raw) const
{
    check(t_mu_raw.rows() == 1 + cfg.n_params, "regress: input rows");
    Matrix x = scaler.apply(t_mu_raw);
    for (const auto& layer : regressor)
        x = nn::dense_forward(layer, x);
    return x;
}

std::vector<Matrix> ParamSeqModel::decode(const Matrix& latent) const
{
    return decode_steps(latent, cfg.seq_len);
}

std::vector<Matrix> ParamSeqModel::decode_steps(const Matrix& latent, std::size_t count) const
{
    check(latent.rows() == cfg.latent_dim, "decode: latent rows");
    check(count >= 1 && count <= cfg.seq_len, "decode: step count out of range");
    const std::size_t batch = latent.cols();
    const Matrix seed_state = nn::dense_forward(dec_expander, latent);

    std::vector<nn::LSTMState> states;
    for (std::size_t c = 0; c < dec_cells.size(); ++c) {
        nn::LSTMState s(cfg.dec_hidden, batch);
        if (c == 0) {
            s.h = seed_state;
            s.c = seed_state;
        }
        states.push_back(std::move(s));
    }

    std::vector<Matrix> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const Matrix* input = &seed_state;
        for (std::size_t c = 0; c < dec_cells.size(); ++c) {
            states[c] = nn::lstm_cell_step(dec_cells[c], *input, states[c]);
            input = &states[c].h;
        }
        out.push_back(nn::dense_forward(dec_out, states.back().h));
    }
    return out;
}

std::vector<nn::ParamRef> ParamSeqModel::encoder_parameters()
{
    std::vector<nn::ParamRef> p;
    for (std::size_t i = 0; i < reducers.size(); ++i) {
        p.push_back({"enc.reducer" + std::to_string(i) + ".W", &reducers[i].weights});
        p.push_back({"enc.reducer" + std::to_string(i) + ".b", &reducers[i].bias});
    }
    for (std::size_t i = 0; i < enc_cells.size(); ++i) {
        const std::string base = "enc.cell" + std::to_string(i);
        p.push_back({base + ".W", &enc_cells[i].W});
        p.push_back({base + ".U", &enc_cells[i].U});
        p.push_back({base + ".b", &enc_cells[i].b});
    }
    if (has_enc_head) {
        p.push_back({"enc.head.W", &enc_head.weights});
        p.push_back({"enc.head.b", &enc_head.bias});
    }
    return p;
}

std::vector<nn::ParamRef> ParamSeqModel::regressor_parameters()
{
    std::vector<nn::ParamRef> p;
    for (std::size_t i = 0; i < regressor.size(); ++i) {
        p.push_back({"reg.layer" + std::to_string(i) + ".W", &regressor[i].weights});
        p.push_back({"reg.layer" + std::to_string(i) + ".b", &regressor[i].bias});
    }
    return p;
}

std::vector<nn::ParamRef> ParamSeqModel::decoder_parameters()
{
    std::vector<nn::ParamRef> p;
    p.push_back({"dec.expander.W", &dec_expander.weights});
    p.push_back({"dec.expander.b", &dec_expander.bias});
    for (std::size_t i = 0; i < dec_cells.size(); ++i) {
        const std::string base = "dec.cell" + std::to_string(i);
        p.push_back({base + ".W", &dec_cells[i].W});
        p.push_back({base + ".U", &dec_cells[i].U});
        p.push_back({base + ".b", &dec_cells[i].b});
    }
    p.push_back({"dec.out.W", &dec_out.weights});
    p.push_back({"dec.out.b", &dec_out.bias});
    return p;
}

std::vector<nn::ParamRef> ParamSeqModel::parameters()
{
    std::vector<nn::ParamRef> p = encoder_parameters();
    for (auto& r : regressor_parameters())
        p.push_back(r);
    for (auto& r : decoder_parameters())
        p.push_back(r);
    return p;
}

MuBatch gather_mu_batch(const WindowDataset& ds, const std::vector<std::size_t>& idxs)
{
    MuBatch batch;
    batch.steps.resize(ds.seq_len);
    for (std::size_t k = 0; k < ds.seq_len; ++k)
        ds.states.gather_step(idxs, k, batch.steps[k]);
    ds.params.gather_step(idxs, 0, batch.inputs);
    return batch;
}

MuLossBreakdown mu_loss(const ParamSeqModel& m, const MuBatch& batch, double recon_weight)
{
    check(recon_weight >= 0.0 && recon_weight <= 1.0, "recon weight outside [0, 1]");
    const std::size_t b = batch.inputs.cols();
    check(b > 0, "empty batch");

    const Matrix z_reg = m.regress(batch.inputs);
    const std::vector<Matrix> recon = m.decode(z_reg);
    const Matrix z_enc = m.encode(batch.steps);

    double rec = 0.0;
    for (std::size_t k = 0; k < recon.size(); ++k) {
        Matrix d = recon[k];
        sub_inplace(d, batch.steps[k]);
        rec += dot(d, d);
    }
    Matrix dz = z_enc;
    sub_inplace(dz, z_reg);
    const double latent_fit = dot(dz, dz);

    MuLossBreakdown out;
    out.weight = recon_weight;
    out.recon = rec / static_cast<double>(b);
    out.latent_fit = latent_fit / static_cast<double>(b);
    out.total = 0.5 * recon_weight * out.recon + 0.5 * (1.0 - recon_weight) * out.latent_fit;
    return out;
}

namespace {

struct TracedParamSeq {
    std::vector<nn::DenseVars> reducers;
    std::vector<nn::LSTMVars> enc_cells;
    bool has_enc_head = false;
    nn::DenseVars enc_head;
    std::vector<nn::DenseVars> regressor;
    nn::DenseVars dec_expander;
    std::vector<nn::LSTMVars> dec_cells;
    nn::DenseVars dec_out;
    std::vector<nn::Var> leaves; // same order as ParamSeqModel::parameters()
};

TracedParamSeq lift_model(nn::Tape& tape, const ParamSeqModel& m)
{
    TracedParamSeq t;
    t.has_enc_head = m.has_enc_head;
    for (const auto& red : m.reducers) {
        t.reducers.push_back(nn::lift(tape, red));
        t.leaves.push_back(t.reducers.back().W);
        t.leaves.push_back(t.reducers.back().b);
    }
    for (const auto& cell : m.enc_cells) {
        t.enc_cells.push_back(nn::lift(tape, cell));
        t.leaves.push_back(t.enc_cells.back().W);
        t.leaves.push_back(t.enc_cells.back().U);
        t.leaves.push_back(t.enc_cells.back().b);
    }
    if (m.has_enc_head) {
        t.enc_head = nn::lift(tape, m.enc_head);
        t.leaves.push_back(t.enc_head.W);
        t.leaves.push_back(t.enc_head.b);
    }
    for (const auto& layer : m.regressor) {
        t.regressor.push_back(nn::lift(tape, layer));
        t.leaves.push_back(t.regressor.back().W);
        t.leaves.push_back(t.regressor.back().b);
    }
    t.dec_expander = nn::lift(tape, m.dec_expander);
    t.leaves.push_back(t.dec_expander.W);
    t.leaves.push_back(t.dec_expander.b);
    for (const auto& cell : m.dec_cells) {
        t.dec_cells.push_back(nn::lift(tape, cell));
        t.leaves.push_back(t.dec_cells.back().W);
        t.leaves.push_back(t.dec_cells.back().U);
        t.leaves.push_back(t.dec_cells.back().b);
    }
    t.dec_out = nn::lift(tape, m.dec_out);
    t.leaves.push_back(t.dec_out.W);
    t.leaves.push_back(t.dec_out.b);
    return t;
}

nn::Var traced_encode(nn::Tape& tape, const TracedParamSeq& t, const ParamSeqModel& m,
                      const std::vector<nn::Var>& steps, std::size_t batch)
{
    std::vector<nn::LSTMStateVar> states;
    for (const auto& cell : m.enc_cells) {
        (void)cell;
        nn::Var zh = tape.leaf(Matrix(m.cfg.enc_hidden, batch));
        nn::Var zc = tape.leaf(Matrix(m.cfg.enc_hidden, batch));
        states.push_back({zh, zc});
    }
    for (nn::Var x : steps) {
        for (const auto& red : t.reducers)
            x = nn::dense_forward(tape, red, x);
        for (std::size_t c = 0; c < t.enc_cells.size(); ++c) {
            states[c] = nn::lstm_cell_step(tape, t.enc_cells[c], x, states[c]);
            x = states[c].h;
        }
    }
    nn::Var z = states.back().h;
    if (t.has_enc_head)
        z = nn::dense_forward(tape, t.enc_head, z);
    return z;
}

nn::Var traced_regress(nn::Tape& tape, const TracedParamSeq& t, nn::Var scaled_inputs)
{
    nn::Var x = scaled_inputs;
    for (const auto& layer : t.regressor)
        x = nn::dense_forward(tape, layer, x);
    return x;
}

std::vector<nn::Var> traced_decode(nn::Tape& tape, const TracedParamSeq& t,
                                   const ParamSeqModel& m, nn::Var latent, std::size_t batch)
{
    nn::Var seed_state = nn::dense_forward(tape, t.dec_expander, latent);
    std::vector<nn::LSTMStateVar> states;
    for (std::size_t c = 0; c < t.dec_cells.size(); ++c) {
        if (c == 0) {
            states.push_back({seed_state, seed_state});
        } else {
            nn::Var zh = tape.leaf(Matrix(m.cfg.dec_hidden, batch));
            nn::Var zc = tape.leaf(Matrix(m.cfg.dec_hidden, batch));
            states.push_back({zh, zc});
        }
    }
    std::vector<nn::Var> out;
    out.reserve(m.cfg.seq_len);
    for (std::size_t k = 0; k < m.cfg.seq_len; ++k) {
        nn::Var x = seed_state;
        for (std::size_t c = 0; c < t.dec_cells.size(); ++c) {
            states[c] = nn::lstm_cell_step(tape, t.dec_cells[c], x, states[c]);
            x = states[c].h;
        }
        out.push_back(nn::dense_forward(tape, t.dec_out, x));
    }
    return out;
}

} // namespace

MuLossBreakdown mu_loss_and_gradients(ParamSeqModel& m, const MuBatch& batch,
                                      double recon_weight, std::vector<Matrix>& grads)
{
    check(recon_weight >= 0.0 && recon_weight <= 1.0, "recon weight outside [0, 1]");
    const std::size_t b = batch.inputs.cols();
    check(b > 0, "empty batch");

    nn::Tape tape;
    TracedParamSeq t = lift_model(tape, m);

    std::vector<nn::Var> steps;
    steps.reserve(batch.steps.size());
    for (const Matrix& x : batch.steps)
        steps.push_back(tape.leaf(x));
    nn::Var inputs = tape.leaf(m.scaler.apply(batch.inputs));

    nn::Var z_reg = traced_regress(tape, t, inputs);
    std::vector<nn::Var> recon = traced_decode(tape, t, m, z_reg, b);
    nn::Var z_enc = traced_encode(tape, t, m, steps, b);

    nn::Var rec = tape.sum_squares(tape.sub(recon[0], steps[0]));
    for (std::size_t k = 1; k < recon.size(); ++k)
        rec = tape.add(rec, tape.sum_squares(tape.sub(recon[k], steps[k])));
    nn::Var latent_fit = tape.sum_squares(tape.sub(z_enc, z_reg));

    const double inv_b = 1.0 / static_cast<double>(b);
    nn::Var total = tape.axpby(0.5 * recon_weight * inv_b, rec,
                               0.5 * (1.0 - recon_weight) * inv_b, latent_fit);
    tape.backward(total);

    grads.clear();
    grads.reserve(t.leaves.size());
    for (nn::Var leaf : t.leaves)
        grads.push_back(leaf.grad());

    MuLossBreakdown out;
    out.weight = recon_weight;
    out.recon = rec.value()(0, 0) * inv_b;
    out.latent_fit = latent_fit.value()(0, 0) * inv_b;
    out.total = total.value()(0, 0);
    return out;
}

TrainHistory train_param_seq(ParamSeqModel& m, const WindowDataset& ds,
                             const TrainConfig& cfg)
{
    check(ds.seq_len == m.cfg.seq_len, "dataset/model sequence length mismatch");
    check(ds.states.dim == m.cfg.input_dim, "dataset/model dimension mismatch");

    m.scaler = fit_input_scaler(ds.params, 0, 1 + m.cfg.n_params);

    TrainHistory history;
    history.best_val = std::numeric_limits<double>::infinity();
    if (cfg.max_epochs == 0)
        return history;

    StopWatch watch;
    const SplitIndices split =
        shuffle_split(ds.states.n_seq, cfg.val_fraction, Rng::derive(cfg.seed, "split"));

    std::vector<nn::ParamRef> params = m.parameters();
    nn::AdamState adam;
    adam.cfg.learning_rate = cfg.learning_rate;
    adam.init(params);

    std::vector<Matrix> grads;
    std::vector<Matrix> best_params;
    bool have_best = false;

    auto eval_loss = [&](const std::vector<std::size_t>& idxs) {
        double total = 0.0;
        for (std::size_t start = 0; start < idxs.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(idxs.size(), start + cfg.batch_size);
            const std::vector<std::size_t> chunk(idxs.begin() + static_cast<std::ptrdiff_t>(start),
                                                 idxs.begin() + static_cast<std::ptrdiff_t>(stop));
            const MuBatch batch = gather_mu_batch(ds, chunk);
            total += mu_loss(m, batch, cfg.recon_weight).total * static_cast<double>(chunk.size());
        }
        return total / static_cast<double>(idxs.size());
    };

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto batches =
            epoch_minibatches(split.train, cfg.batch_size, Rng::derive(cfg.seed, "minibatch"), epoch);
        double train_total = 0.0;
        for (const auto& idxs : batches) {
            const MuBatch batch = gather_mu_batch(ds, idxs);
            const MuLossBreakdown loss = mu_loss_and_gradients(m, batch, cfg.recon_weight, grads);
            if (!std::isfinite(loss.total))
                throw std::runtime_error("param_seq_model: loss diverged at epoch " +
                                         std::to_string(epoch) + " (total=" +
                                         std::to_string(loss.total) + ")");
            adam.step(params, grads);
            train_total += loss.total * static_cast<double>(idxs.size());
        }
        history.train_loss.push_back(train_total / static_cast<double>(split.train.size()));

        const double val = eval_loss(split.val);
        history.val_loss.push_back(val);
        if (!std::isfinite(val))
            throw std::runtime_error("param_seq_model: validation loss diverged at epoch " +
                                     std::to_string(epoch));

        if (val < history.best_val) {
            history.best_val = val;
            history.best_epoch = epoch;
            best_params.clear();
            for (const auto& p : params)
                best_params.push_back(*p.value);
            have_best = true;
        } else if (cfg.early_stop && epoch - history.best_epoch >= cfg.patience) {
            break;
        }
        if (cfg.verbose && (epoch % cfg.log_every == 0)) {
            std::printf("  epoch %5zu  train %.6e  val %.6e  best %.6e @%zu\n", epoch,
                        history.train_loss.back(), val, history.best_val, history.best_epoch);
            std::fflush(stdout);
        }
    }

    if (have_best) {
        for (std::size_t i = 0; i < params.size(); ++i)
            *params[i].value = best_params[i];
    }
    history.seconds = watch.seconds();
    return history;
}

ParamSeqPrediction predict_param_seq(const ParamSeqModel& m, const PODBasis& basis,
                                     const ScalingRecord& scaling,
                                     const Matrix& test_params, std::size_t n_test,
                                     std::size_t n_steps)
{
    const std::size_t seq_len = m.cfg.seq_len;
    check(n_test >= 1, "predict: no test instances");
    check(n_steps >= seq_len, "predict: fewer steps than one window");
    check(test_params.cols() == n_test * n_steps, "predict: parameter column count");
    check(test_params.rows() == 1 + m.cfg.n_params, "predict: parameter row count");
    check(basis.reduced_dim() == m.cfg.input_dim, "predict: basis/model dimension mismatch");

    const std::size_t queries = (n_steps + seq_len - 1) / seq_len;

    ParamSeqPrediction pred;
    pred.reduced_model_space = Matrix(m.cfg.input_dim, n_test * n_steps);
    pred.full = Matrix(basis.full_dim(), n_test * n_steps);
    pred.decoder_queries_per_instance = queries;

    for (std::size_t inst = 0; inst < n_test; ++inst) {
        StopWatch watch;
        double nn_seconds = 0.0;
        Matrix inst_reduced(m.cfg.input_dim, n_steps);
        std::size_t next_col = 0;
        for (std::size_t q = 0; q < queries; ++q) {
            const std::size_t start = std::min(q * seq_len, n_steps - seq_len);
            const Matrix t_mu = test_params.column(inst * n_steps + start);
            StopWatch nn_watch;
            const Matrix latent = m.regress(t_mu);
            const std::vector<Matrix> window = m.decode(latent);
            nn_seconds += nn_watch.seconds();
            for (std::size_t k = 0; k < seq_len; ++k) {
                const std::size_t col = start + k;
                if (col < next_col)
                    continue; // overlap from the padded final window
                for (std::size_t j = 0; j < m.cfg.input_dim; ++j)
                    inst_reduced(j, col) = window[k](j, 0);
            }
            next_col = start + seq_len;
        }
        const Matrix lifted = basis.lift(invert_scaling(scaling, inst_reduced));
        for (std::size_t col = 0; col < n_steps; ++col) {
            for (std::size_t j = 0; j < m.cfg.input_dim; ++j)
                pred.reduced_model_space(j, inst * n_steps + col) = inst_reduced(j, col);
            for (std::size_t j = 0; j < basis.full_dim(); ++j)
                pred.full(j, inst * n_steps + col) = lifted(j, col);
        }
        pred.t_nn.add(nn_seconds);
        pred.t_rec.add(watch.seconds());
    }
    return pred;
}

} // namespace rom
