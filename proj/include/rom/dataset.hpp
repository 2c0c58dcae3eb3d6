#ifndef ROM_DATASET_HPP
#define ROM_DATASET_HPP

#include "rom/matrix.hpp"

#include <cstdint>
#include <vector>

namespace rom {

// Stack of equal-length vector sequences: entry (i, j, k) is component j
// of step k of sequence i. Steps of one sequence are stored contiguously
// so batched gathers are column copies.
struct WindowTensor {
    std::size_t n_seq = 0;
    std::size_t dim = 0;
    std::size_t len = 0;
    std::vector<double> data; // [(i * len + k) * dim + j]

    WindowTensor() = default;
    WindowTensor(std::size_t n_seq_, std::size_t dim_, std::size_t len_)
        : n_seq(n_seq_), dim(dim_), len(len_), data(n_seq_ * dim_ * len_, 0.0) {}

    double& at(std::size_t i, std::size_t j, std::size_t k)
    {
        return data[(i * len + k) * dim + j];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const
    {
        return data[(i * len + k) * dim + j];
    }

    // dim x |idxs| matrix whose columns are step k of the chosen sequences.
    void gather_step(const std::vector<std::size_t>& idxs, std::size_t k, Matrix& out) const;
    Matrix sequence(std::size_t i) const; // dim x len
};

// Sliding windows of every training trajectory plus aligned (t, mu) rows:
// sequence i starts at offset alpha = i mod (n_steps - seq_len) within
// instance beta = i div (n_steps - seq_len); window entries step through
// consecutive snapshot columns.
struct WindowDataset {
    WindowTensor states; // n_seq x dim x seq_len
    WindowTensor params; // n_seq x (n_mu + 1) x seq_len, rows (t, mu)
    std::size_t n_instances = 0;
    std::size_t n_steps = 0;
    std::size_t seq_len = 0;
};

// reduced: dim x (n_instances * n_steps), columns instance-major then time;
// params: (n_mu + 1) x same columns. Requires seq_len < n_steps.
WindowDataset build_window_dataset(const Matrix& reduced, const Matrix& params,
                                   std::size_t n_instances, std::size_t n_steps,
                                   std::size_t seq_len);

// Past/future split of a window tensor along the step axis.
struct PrevHorizonPair {
    WindowTensor past;    // steps [0, p)
    WindowTensor horizon; // steps [p, p + k)
};
PrevHorizonPair split_prev_horizon(const WindowTensor& t, std::size_t past_len,
                                   std::size_t horizon_len);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Seeded random partition with |val| = round(fraction * n); both index
// lists come back sorted.
SplitIndices shuffle_split(std::size_t n_sequences, double fraction, std::uint64_t seed);

// One epoch's minibatches: a fresh seeded shuffle of the index list,
// partitioned into dim_batch-sized groups (last one may be short). Every
// index appears exactly once per epoch.
std::vector<std::vector<std::size_t>> epoch_minibatches(const std::vector<std::size_t>& indices,
                                                        std::size_t dim_batch,
                                                        std::uint64_t seed,
                                                        std::uint64_t epoch);

} // namespace rom

#endif
