#include "rom/dataset.hpp"

#include "rom/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace rom {

namespace {

void check(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument("dataset: " + what);
}

} // namespace

void WindowTensor::gather_step(const std::vector<std::size_t>& idxs, std::size_t k,
                               Matrix& out) const
{
    out = Matrix(dim, idxs.size());
    for (std::size_t b = 0; b < idxs.size(); ++b) {
        const double* src = &data[(idxs[b] * len + k) * dim];
        for (std::size_t j = 0; j < dim; ++j)
            out(j, b) = src[j];
    }
}

Matrix WindowTensor::sequence(std::size_t i) const
{
    Matrix out(dim, len);
    for (std::size_t k = 0; k < len; ++k) {
        const double* src = &data[(i * len + k) * dim];
        for (std::size_t j = 0; j < dim; ++j)
            out(j, k) = src[j];
    }
    return out;
}

WindowDataset build_window_dataset(const Matrix& reduced, const Matrix& params,
                                   std::size_t n_instances, std::size_t n_steps,
                                   std::size_t seq_len)
{
    check(seq_len >= 1, "sequence length must be positive");
    check(seq_len < n_steps, "sequence length must be shorter than the trajectory");
    check(reduced.cols() == n_instances * n_steps, "reduced column count mismatch");
    check(params.cols() == reduced.cols(), "parameter column count mismatch");

    const std::size_t windows_per_instance = n_steps - seq_len;
    const std::size_t n_seq = n_instances * windows_per_instance;

    WindowDataset ds;
    ds.n_instances = n_instances;
    ds.n_steps = n_steps;
    ds.seq_len = seq_len;
    ds.states = WindowTensor(n_seq, reduced.rows(), seq_len);
    ds.params = WindowTensor(n_seq, params.rows(), seq_len);

    for (std::size_t i = 0; i < n_seq; ++i) {
        const std::size_t alpha = i % windows_per_instance;
        const std::size_t beta = i / windows_per_instance;
        for (std::size_t k = 0; k < seq_len; ++k) {
            const std::size_t col = beta * n_steps + alpha + k;
            for (std::size_t j = 0; j < reduced.rows(); ++j)
                ds.states.at(i, j, k) = reduced(j, col);
            for (std::size_t j = 0; j < params.rows(); ++j)
                ds.params.at(i, j, k) = params(j, col);
        }
    }
    return ds;
}

PrevHorizonPair split_prev_horizon(const WindowTensor& t, std::size_t past_len,
                                   std::size_t horizon_len)
{
    check(past_len >= 1 && horizon_len >= 1, "past and horizon lengths must be positive");
    check(past_len + horizon_len == t.len,
          "past + horizon must equal the window length");
    PrevHorizonPair pair;
    pair.past = WindowTensor(t.n_seq, t.dim, past_len);
    pair.horizon = WindowTensor(t.n_seq, t.dim, horizon_len);
    for (std::size_t i = 0; i < t.n_seq; ++i) {
        std::memcpy(&pair.past.data[i * past_len * t.dim],
                    &t.data[i * t.len * t.dim],
                    past_len * t.dim * sizeof(double));
        std::memcpy(&pair.horizon.data[i * horizon_len * t.dim],
                    &t.data[(i * t.len + past_len) * t.dim],
                    horizon_len * t.dim * sizeof(double));
    }
    return pair;
}

SplitIndices shuffle_split(std::size_t n_sequences, double fraction, std::uint64_t seed)
{
    check(n_sequences >= 2, "need at least two sequences to split");
    check(fraction > 0.0 && fraction < 1.0, "validation fraction must be in (0, 1)");

    std::vector<std::size_t> perm(n_sequences);
    for (std::size_t i = 0; i < n_sequences; ++i)
        perm[i] = i;
    Rng rng(seed);
    for (std::size_t i = n_sequences; i-- > 1;) {
        const std::size_t j = rng.below(i + 1);
        std::swap(perm[i], perm[j]);
    }

    const auto n_val = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(n_sequences)));
    check(n_val >= 1 && n_val < n_sequences, "degenerate validation split");

    SplitIndices split;
    split.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
    split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

std::vector<std::vector<std::size_t>> epoch_minibatches(const std::vector<std::size_t>& indices,
                                                        std::size_t dim_batch,
                                                        std::uint64_t seed,
                                                        std::uint64_t epoch)
{
    check(dim_batch >= 1, "batch size must be positive");
    check(!indices.empty(), "empty index set");

    std::vector<std::size_t> perm = indices;
    Rng rng(Rng::derive(seed, "epoch-" + std::to_string(epoch)));
    for (std::size_t i = perm.size(); i-- > 1;) {
        const std::size_t j = rng.below(i + 1);
        std::swap(perm[i], perm[j]);
    }

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < perm.size(); start += dim_batch) {
        const std::size_t stop = std::min(perm.size(), start + dim_batch);
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                             perm.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return batches;
}

} // namespace rom
