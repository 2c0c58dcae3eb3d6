#include "rom/pod.hpp"

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
        throw std::invalid_argument("pod: " + what);
}

Matrix row_block(const Matrix& m, std::size_t r0, std::size_t r1)
{
    Matrix out(r1 - r0, m.cols());
    std::memcpy(out.data(), m.row(r0), out.size() * sizeof(double));
    return out;
}

} // namespace

void SnapshotMatrix::validate() const
{
    check(n_dofs > 0 && n_channels > 0 && n_instances > 0 && n_steps > 0,
          "snapshot matrix with zero extent");
    check(data.rows() == n_dofs * n_channels, "snapshot row count mismatch");
    check(data.cols() == n_instances * n_steps, "snapshot column count mismatch");
    if (!data.all_finite())
        throw std::runtime_error("pod: snapshot matrix contains non-finite entries");
}

Matrix PODBasis::project(const Matrix& full) const
{
    check(full.rows() == full_dim(), "project: row count mismatch");
    Matrix out(reduced_dim(), full.cols());
    for (std::size_t c = 0; c < n_channels; ++c) {
        const Matrix chan = row_block(full, c * n_dofs, (c + 1) * n_dofs);
        Matrix red;
        matmul_tn(blocks[c], chan, red);
        std::memcpy(out.row(c * n_modes), red.data(), red.size() * sizeof(double));
    }
    return out;
}

Matrix PODBasis::lift(const Matrix& reduced) const
{
    check(reduced.rows() == reduced_dim(), "lift: row count mismatch");
    Matrix out(full_dim(), reduced.cols());
    for (std::size_t c = 0; c < n_channels; ++c) {
        const Matrix red = row_block(reduced, c * n_modes, (c + 1) * n_modes);
        Matrix chan;
        matmul(blocks[c], red, chan);
        std::memcpy(out.row(c * n_dofs), chan.data(), chan.size() * sizeof(double));
    }
    return out;
}

double PODBasis::orthonormality_defect() const
{
    double worst = 0.0;
    for (const Matrix& v : blocks) {
        Matrix g;
        matmul_tn(v, v, g);
        for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j)
                worst = std::max(worst, std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)));
    }
    return worst;
}

PODBasis compute_rpod_basis(const SnapshotMatrix& snapshots, std::size_t n_modes,
                            std::size_t oversampling, std::size_t power_iters,
                            std::uint64_t seed)
{
    snapshots.validate();
    const std::size_t rows = snapshots.n_dofs;
    const std::size_t cols = snapshots.n_columns();
    check(n_modes >= 1, "n_modes must be positive");
    check(n_modes <= std::min(rows, cols),
          "n_modes exceeds the rank bound min(rows, cols)");

    const std::size_t sketch = std::min(n_modes + oversampling, std::min(rows, cols));

    PODBasis basis;
    basis.n_dofs = rows;
    basis.n_channels = snapshots.n_channels;
    basis.n_modes = n_modes;

    for (std::size_t c = 0; c < snapshots.n_channels; ++c) {
        const Matrix s = row_block(snapshots.data, c * rows, (c + 1) * rows);

        Rng rng(Rng::derive(seed, "rpod-channel-" + std::to_string(c)));
        Matrix omega(cols, sketch);
        for (std::size_t i = 0; i < cols; ++i)
            for (std::size_t j = 0; j < sketch; ++j)
                omega(i, j) = rng.normal();

        Matrix y;
        matmul(s, omega, y);
        Matrix q = householder_q(y);
        for (std::size_t it = 0; it < power_iters; ++it) {
            Matrix z;
            matmul_tn(s, q, z);       // cols x sketch
            z = householder_q(z);
            matmul(s, z, y);
            q = householder_q(y);
        }

        Matrix b;
        matmul_tn(q, s, b);           // sketch x cols
        Matrix gram;
        matmul_nt(b, b, gram);        // sketch x sketch, symmetric PSD
        std::vector<double> eig;
        Matrix w;
        symmetric_eig(gram, eig, w);

        Matrix w_lead(sketch, n_modes);
        for (std::size_t i = 0; i < sketch; ++i)
            for (std::size_t j = 0; j < n_modes; ++j)
                w_lead(i, j) = w(i, j);
        Matrix v;
        matmul(q, w_lead, v);

        std::vector<double> sv(sketch, 0.0);
        for (std::size_t i = 0; i < sketch; ++i)
            sv[i] = std::sqrt(std::max(eig[i], 0.0));

        basis.blocks.push_back(std::move(v));
        basis.singular_values.push_back(std::move(sv));
    }
    return basis;
}

PODBasis identity_basis(std::size_t n_dofs, std::size_t n_channels)
{
    PODBasis basis;
    basis.n_dofs = n_dofs;
    basis.n_channels = n_channels;
    basis.n_modes = n_dofs;
    for (std::size_t c = 0; c < n_channels; ++c) {
        basis.blocks.push_back(Matrix::identity(n_dofs));
        basis.singular_values.emplace_back();
    }
    return basis;
}

ScalingRecord fit_scaling(const Matrix& reduced_train)
{
    check(reduced_train.rows() > 0 && reduced_train.cols() > 0, "fit_scaling on empty matrix");
    ScalingRecord rec;
    rec.enabled = true;
    rec.min_vals.resize(reduced_train.rows());
    rec.max_vals.resize(reduced_train.rows());
    for (std::size_t i = 0; i < reduced_train.rows(); ++i) {
        const double* row = reduced_train.row(i);
        double lo = row[0], hi = row[0];
        for (std::size_t j = 1; j < reduced_train.cols(); ++j) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
        rec.min_vals[i] = lo;
        rec.max_vals[i] = hi;
    }
    return rec;
}

Matrix apply_scaling(const ScalingRecord& rec, const Matrix& reduced)
{
    if (!rec.enabled)
        return reduced;
    check(reduced.rows() == rec.min_vals.size(), "apply_scaling: row count mismatch");
    Matrix out = reduced;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double lo = rec.min_vals[i];
        const double span = rec.max_vals[i] - lo;
        double* row = out.row(i);
        if (span == 0.0) {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = 0.0;
        } else {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = (row[j] - lo) / span;
        }
    }
    return out;
}

Matrix invert_scaling(const ScalingRecord& rec, const Matrix& scaled)
{
    if (!rec.enabled)
        return scaled;
    check(scaled.rows() == rec.min_vals.size(), "invert_scaling: row count mismatch");
    Matrix out = scaled;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double lo = rec.min_vals[i];
        const double span = rec.max_vals[i] - lo;
        double* row = out.row(i);
        if (span == 0.0) {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = lo;
        } else {
            for (std::size_t j = 0; j < out.cols(); ++j)
                row[j] = lo + row[j] * span;
        }
    }
    return out;
}

} // namespace rom
