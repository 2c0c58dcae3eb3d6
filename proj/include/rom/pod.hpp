#ifndef ROM_POD_HPP
#define ROM_POD_HPP

#include "rom/matrix.hpp"

#include <cstdint>
#include <vector>

namespace rom {

// Full-order states, one column per (instance, time) pair; columns are
// grouped by instance, time-ordered within each group. Vector-valued
// problems stack one row block per channel.
struct SnapshotMatrix {
    std::size_t n_dofs = 0;      // rows per channel
    std::size_t n_channels = 1;
    std::size_t n_instances = 0;
    std::size_t n_steps = 0;
    Matrix data;                 // (n_dofs*n_channels) x (n_instances*n_steps)

    std::size_t n_columns() const { return n_instances * n_steps; }
    void validate() const; // throws on inconsistent shape or non-finite data
};

// Orthonormal projection basis with one block per channel. The logical
// basis matrix is block-diagonal: channel c of a full vector is projected
// by blocks[c] alone.
struct PODBasis {
    std::size_t n_dofs = 0;
    std::size_t n_channels = 1;
    std::size_t n_modes = 0; // per channel
    std::vector<Matrix> blocks; // n_dofs x n_modes each
    std::vector<std::vector<double>> singular_values; // per channel, non-increasing

    std::size_t full_dim() const { return n_dofs * n_channels; }
    std::size_t reduced_dim() const { return n_modes * n_channels; }

    // u_N = V^T u_h; accepts one column or a matrix of columns.
    Matrix project(const Matrix& full) const;
    // u_h = V u_N.
    Matrix lift(const Matrix& reduced) const;

    double orthonormality_defect() const; // max |V^T V - I|
};

// Randomized POD: Gaussian range finder with the given oversampling and
// power-iteration count, QR re-orthonormalization at every pass, then an
// exact factorization of the small projected matrix. Each channel block
// of the snapshot matrix is reduced independently. Deterministic given
// the seed.
PODBasis compute_rpod_basis(const SnapshotMatrix& snapshots, std::size_t n_modes,
                            std::size_t oversampling, std::size_t power_iters,
                            std::uint64_t seed);

// N = N_h identity basis for problems small enough to skip compression.
PODBasis identity_basis(std::size_t n_dofs, std::size_t n_channels);

// Per-coordinate min/max normalization of a reduced snapshot matrix.
// Statistics are frozen at fit time (training data) and reused verbatim
// afterwards. Coordinates with max == min map to 0 and invert back to
// the stored constant.
struct ScalingRecord {
    bool enabled = false;
    std::vector<double> min_vals;
    std::vector<double> max_vals;
};

ScalingRecord fit_scaling(const Matrix& reduced_train);
Matrix apply_scaling(const ScalingRecord& rec, const Matrix& reduced);
Matrix invert_scaling(const ScalingRecord& rec, const Matrix& scaled);

} // namespace rom

#endif
