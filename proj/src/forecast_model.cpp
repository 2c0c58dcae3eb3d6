#include "rom/forecast_model.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace rom {

namespace {

void check(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument("forecast_model: " + what);
}

} // namespace

void ForecastConfig::resolve()
{
    check(input_dim > 0 && past_len > 0 && horizon > 0, "zero model dimension");
    check(enc_depth >= 1 && dec_depth >= 1, "need at least one cell per side");
    if (state_dim == 0)
        state_dim = input_dim;
    if (param_embed == 0)
        param_embed = state_dim;
}

ForecastModel::ForecastModel(const ForecastConfig& config, std::uint64_t seed)
    : cfg(config)
{
    cfg.resolve();
    Rng rng(Rng::derive(seed, "forecast-init"));

    for (std::size_t c = 0; c < cfg.enc_depth; ++c)
        enc_cells.push_back(nn::make_lstm_cell(cfg.state_dim, c == 0 ? cfg.input_dim : cfg.state_dim, rng));

    std::size_t w_in = cfg.n_params;
    for (std::size_t w : cfg.param_net_hidden) {
        param_net.push_back(nn::make_dense(w, w_in, nn::Activation::elu, rng));
        w_in = w;
    }
    param_net.push_back(nn::make_dense(cfg.param_embed, w_in, nn::Activation::elu, rng));

    w_in = cfg.state_dim + cfg.param_embed;
    for (std::size_t w : cfg.merge_hidden) {
        merge_net.push_back(nn::make_dense(w, w_in, nn::Activation::elu, rng));
        w_in = w;
    }
    merge_net.push_back(nn::make_dense(cfg.state_dim, w_in, nn::Activation::linear, rng));

    for (std::size_t c = 0; c < cfg.dec_depth; ++c)
        dec_cells.push_back(nn::make_lstm_cell(cfg.state_dim, cfg.state_dim, rng));
    dec_out = nn::make_dense(cfg.input_dim, cfg.state_dim, nn::Activation::linear, rng);

    scaler.lo.assign(cfg.n_params, 0.0);
    scaler.hi.assign(cfg.n_params, 1.0);
}

Matrix ForecastModel::encode_past(const std::vector<Matrix>& past) const
{
    check(past.size() == cfg.past_len, "encode_past: wrong window length");
    const nn::LSTMSequenceResult res = nn::lstm_sequence_forward(enc_cells, past);
    return res.finals.back().h;
}

Matrix ForecastModel::merged_state(const Matrix& h_enc, const Matrix& mu_raw) const
{
    check(mu_raw.rows() == cfg.n_params || cfg.n_params == 0, "merged_state: parameter rows");
    Matrix embed = scaler.apply(mu_raw);
    for (const auto& layer : param_net)
        embed = nn::dense_forward(layer, embed);

    Matrix joint(h_enc.rows() + embed.rows(), h_enc.cols());
    for (std::size_t j = 0; j < h_enc.cols(); ++j) {
        for (std::size_t i = 0; i < h_enc.rows(); ++i)
            joint(i, j) = h_enc(i, j);
        for (std::size_t i = 0; i < embed.rows(); ++i)
            joint(h_enc.rows() + i, j) = embed(i, j);
    }
    Matrix state = joint;
    for (const auto& layer : merge_net)
        state = nn::dense_forward(layer, state);
    return state;
}

std::vector<Matrix> ForecastModel::decode(const Matrix& state) const
{
    const std::size_t batch = state.cols();
    std::vector<nn::LSTMState> states;
    for (std::size_t c = 0; c < dec_cells.size(); ++c) {
        nn::LSTMState s(cfg.state_dim, batch);
        if (c == 0) {
            s.h = state;
            s.c = state;
        }
        states.push_back(std::move(s));
    }
    std::vector<Matrix> out;
    out.reserve(cfg.horizon);
    for (std::size_t k = 0; k < cfg.horizon; ++k) {
        const Matrix* input = &state;
        for (std::size_t c = 0; c < dec_cells.size(); ++c) {
            states[c] = nn::lstm_cell_step(dec_cells[c], *input, states[c]);
            input = &states[c].h;
        }
        out.push_back(nn::dense_forward(dec_out, states.back().h));
    }
    return out;
}

std::vector<Matrix> ForecastModel::forward(const std::vector<Matrix>& past,
                                           const Matrix& mu_raw) const
{
    return decode(merged_state(encode_past(past), mu_raw));
}

std::vector<nn::ParamRef> ForecastModel::parameters()
{
    std::vector<nn::ParamRef> p;
    for (std::size_t i = 0; i < enc_cells.size(); ++i) {
        const std::string base = "enc.cell" + std::to_string(i);
        p.push_back({base + ".W", &enc_cells[i].W});
        p.push_back({base + ".U", &enc_cells[i].U});
        p.push_back({base + ".b", &enc_cells[i].b});
    }
    for (std::size_t i = 0; i < param_net.size(); ++i) {
        p.push_back({"mu.layer" + std::to_string(i) + ".W", &param_net[i].weights});
        p.push_back({"mu.layer" + std::to_string(i) + ".b", &param_net[i].bias});
    }
    for (std::size_t i = 0; i < merge_net.size(); ++i) {
        p.push_back({"merge.layer" + std::to_string(i) + ".W", &merge_net[i].weights});
        p.push_back({"merge.layer" + std::to_string(i) + ".b", &merge_net[i].bias});
    }
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

ForecastBatch gather_forecast_batch(const WindowDataset& ds, const ForecastConfig& cfg,
                                    const std::vector<std::size_t>& idxs)
{
    check(cfg.past_len + cfg.horizon == ds.seq_len,
          "past + horizon must equal the dataset window length");
    ForecastBatch batch;
    batch.past.resize(cfg.past_len);
    batch.horizon.resize(cfg.horizon);
    for (std::size_t k = 0; k < cfg.past_len; ++k)
        ds.states.gather_step(idxs, k, batch.past[k]);
    for (std::size_t k = 0; k < cfg.horizon; ++k)
        ds.states.gather_step(idxs, cfg.past_len + k, batch.horizon[k]);
    Matrix tm;
    ds.params.gather_step(idxs, 0, tm);
    batch.mu = Matrix(tm.rows() - 1, tm.cols());
    for (std::size_t i = 1; i < tm.rows(); ++i)
        for (std::size_t j = 0; j < tm.cols(); ++j)
            batch.mu(i - 1, j) = tm(i, j);
    return batch;
}

double forecast_loss(const ForecastModel& m, const ForecastBatch& batch)
{
    const std::size_t b = batch.mu.cols();
    check(b > 0, "empty batch");
    const std::vector<Matrix> pred = m.forward(batch.past, batch.mu);
    double total = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        Matrix d = pred[k];
        sub_inplace(d, batch.horizon[k]);
        total += dot(d, d);
    }
    return total / static_cast<double>(m.cfg.input_dim * m.cfg.horizon * b);
}

namespace {

struct TracedForecast {
    std::vector<nn::LSTMVars> enc_cells;
    std::vector<nn::DenseVars> param_net;
    std::vector<nn::DenseVars> merge_net;
    std::vector<nn::LSTMVars> dec_cells;
    nn::DenseVars dec_out;
    std::vector<nn::Var> leaves;
};

TracedForecast lift_model(nn::Tape& tape, const ForecastModel& m)
{
    TracedForecast t;
    for (const auto& cell : m.enc_cells) {
        t.enc_cells.push_back(nn::lift(tape, cell));
        t.leaves.push_back(t.enc_cells.back().W);
        t.leaves.push_back(t.enc_cells.back().U);
        t.leaves.push_back(t.enc_cells.back().b);
    }
    for (const auto& layer : m.param_net) {
        t.param_net.push_back(nn::lift(tape, layer));
        t.leaves.push_back(t.param_net.back().W);
        t.leaves.push_back(t.param_net.back().b);
    }
    for (const auto& layer : m.merge_net) {
        t.merge_net.push_back(nn::lift(tape, layer));
        t.leaves.push_back(t.merge_net.back().W);
        t.leaves.push_back(t.merge_net.back().b);
    }
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

} // namespace

double forecast_loss_and_gradients(ForecastModel& m, const ForecastBatch& batch,
                                   std::vector<Matrix>& grads)
{
    const std::size_t b = batch.mu.cols();
    check(b > 0, "empty batch");

    nn::Tape tape;
    TracedForecast t = lift_model(tape, m);

    // Encoder over the past window.
    std::vector<nn::LSTMStateVar> enc_states;
    for (std::size_t c = 0; c < t.enc_cells.size(); ++c) {
        enc_states.push_back({tape.leaf(Matrix(m.cfg.state_dim, b)),
                              tape.leaf(Matrix(m.cfg.state_dim, b))});
    }
    for (const Matrix& step : batch.past) {
        nn::Var x = tape.leaf(step);
        for (std::size_t c = 0; c < t.enc_cells.size(); ++c) {
            enc_states[c] = nn::lstm_cell_step(tape, t.enc_cells[c], x, enc_states[c]);
            x = enc_states[c].h;
        }
    }
    nn::Var h_enc = enc_states.back().h;

    // Parameter embedding and merge.
    nn::Var embed = tape.leaf(m.scaler.apply(batch.mu));
    for (const auto& layer : t.param_net)
        embed = nn::dense_forward(tape, layer, embed);
    nn::Var joint = tape.concat_rows(h_enc, embed);
    nn::Var state = joint;
    for (const auto& layer : t.merge_net)
        state = nn::dense_forward(tape, layer, state);

    // Decoder.
    std::vector<nn::LSTMStateVar> dec_states;
    for (std::size_t c = 0; c < t.dec_cells.size(); ++c) {
        if (c == 0) {
            dec_states.push_back({state, state});
        } else {
            dec_states.push_back({tape.leaf(Matrix(m.cfg.state_dim, b)),
                                  tape.leaf(Matrix(m.cfg.state_dim, b))});
        }
    }
    nn::Var loss_sum;
    for (std::size_t k = 0; k < m.cfg.horizon; ++k) {
        nn::Var x = state;
        for (std::size_t c = 0; c < t.dec_cells.size(); ++c) {
            dec_states[c] = nn::lstm_cell_step(tape, t.dec_cells[c], x, dec_states[c]);
            x = dec_states[c].h;
        }
        nn::Var y = nn::dense_forward(tape, t.dec_out, x);
        nn::Var sq = tape.sum_squares(tape.sub(y, tape.leaf(batch.horizon[k])));
        loss_sum = (k == 0) ? sq : tape.add(loss_sum, sq);
    }
    nn::Var total =
        tape.scale(loss_sum, 1.0 / static_cast<double>(m.cfg.input_dim * m.cfg.horizon * b));
    tape.backward(total);

    grads.clear();
    grads.reserve(t.leaves.size());
    for (nn::Var leaf : t.leaves)
        grads.push_back(leaf.grad());
    return total.value()(0, 0);
}

TrainHistory train_forecast(ForecastModel& m, const WindowDataset& ds, const TrainConfig& cfg)
{
    check(ds.seq_len == m.cfg.past_len + m.cfg.horizon,
          "dataset window length must equal past + horizon");
    check(ds.states.dim == m.cfg.input_dim, "dataset/model dimension mismatch");

    if (m.cfg.n_params > 0)
        m.scaler = fit_input_scaler(ds.params, 1, 1 + m.cfg.n_params);

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
            const ForecastBatch batch = gather_forecast_batch(ds, m.cfg, chunk);
            total += forecast_loss(m, batch) * static_cast<double>(chunk.size());
        }
        return total / static_cast<double>(idxs.size());
    };

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto batches =
            epoch_minibatches(split.train, cfg.batch_size, Rng::derive(cfg.seed, "minibatch"), epoch);
        double train_total = 0.0;
        for (const auto& idxs : batches) {
            const ForecastBatch batch = gather_forecast_batch(ds, m.cfg, idxs);
            const double loss = forecast_loss_and_gradients(m, batch, grads);
            if (!std::isfinite(loss))
                throw std::runtime_error("forecast_model: loss diverged at epoch " +
                                         std::to_string(epoch));
            adam.step(params, grads);
            train_total += loss * static_cast<double>(idxs.size());
        }
        history.train_loss.push_back(train_total / static_cast<double>(split.train.size()));

        const double val = eval_loss(split.val);
        history.val_loss.push_back(val);
        if (!std::isfinite(val))
            throw std::runtime_error("forecast_model: validation loss diverged at epoch " +
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

RolloutResult rollout_forecast(const ForecastModel& m, const Matrix& reduced_model_space,
                               std::size_t n_test, std::size_t cols_per_instance,
                               const Matrix& test_mus, std::size_t ext_start,
                               std::size_t n_windows, const RolloutCapture* capture)
{
    const std::size_t p = m.cfg.past_len;
    const std::size_t k = m.cfg.horizon;
    const std::size_t dim = m.cfg.input_dim;
    check(n_windows >= 1, "rollout: need at least one window");
    check(ext_start >= p, "rollout: not enough history before the extrapolation start");
    check(ext_start <= cols_per_instance, "rollout: extrapolation start beyond the data");
    check(reduced_model_space.rows() == dim, "rollout: dimension mismatch");
    check(reduced_model_space.cols() == n_test * cols_per_instance, "rollout: column count");
    check(test_mus.rows() == m.cfg.n_params && test_mus.cols() == n_test,
          "rollout: parameter matrix shape");

    const std::size_t buf_len = (n_windows - 1) * k + p + k;

    RolloutResult result;
    result.extrapolated_model_space = Matrix(dim, n_test * n_windows * k);

    for (std::size_t inst = 0; inst < n_test; ++inst) {
        Matrix buffer(dim, buf_len);
        for (std::size_t c = 0; c < p; ++c) {
            const std::size_t src = inst * cols_per_instance + ext_start - p + c;
            for (std::size_t j = 0; j < dim; ++j)
                buffer(j, c) = reduced_model_space(j, src);
        }
        const Matrix mu = test_mus.column(inst);

        StopWatch nn_watch;
        std::size_t cursor = 0; // start of the current encoder window
        for (std::size_t w = 0; w < n_windows; ++w) {
            std::vector<Matrix> window(p);
            for (std::size_t c = 0; c < p; ++c)
                window[c] = buffer.column(cursor + c);
            if (capture) {
                Matrix win(dim, p);
                for (std::size_t c = 0; c < p; ++c)
                    for (std::size_t j = 0; j < dim; ++j)
                        win(j, c) = window[c](j, 0);
                (*capture)(inst, w, win);
            }
            const std::vector<Matrix> forecast = m.forward(window, mu);
            for (std::size_t c = 0; c < k; ++c)
                for (std::size_t j = 0; j < dim; ++j)
                    buffer(j, cursor + p + c) = forecast[c](j, 0);
            cursor += k;
            ++result.encoder_queries;
        }
        result.t_nn.add(nn_watch.seconds());

        result.max_abs = std::max(result.max_abs, buffer.max_abs());
        if (!buffer.all_finite())
            throw std::runtime_error("forecast_model: rollout produced non-finite values");
        for (std::size_t c = 0; c < n_windows * k; ++c)
            for (std::size_t j = 0; j < dim; ++j)
                result.extrapolated_model_space(j, inst * n_windows * k + c) = buffer(j, p + c);
    }
    return result;
}

} // namespace rom
