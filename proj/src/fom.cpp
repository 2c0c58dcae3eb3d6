#include "rom/fom.hpp"

#include "rom/banded.hpp"
#include "rom/ode.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace rom {

namespace {

void check(bool ok, const std::string& what)
{
    if (!ok)
        throw std::invalid_argument("fom: " + what);
}

} // namespace

// ---- banded LU --------------------------------------------------------

BandedLU::BandedLU(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1),
      storage_(n * (2 * kl + ku + 1), 0.0), pivot_(n, 0)
{
}

double& BandedLU::at(std::size_t i, std::size_t j)
{
    const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(j) -
                               static_cast<std::ptrdiff_t>(i) +
                               static_cast<std::ptrdiff_t>(kl_);
    if (i >= n_ || j >= n_ || off < 0 ||
        off > static_cast<std::ptrdiff_t>(kl_ + ku_))
        throw std::out_of_range("banded: entry outside the band");
    return storage_[i * width_ + static_cast<std::size_t>(off)];
}

void BandedLU::clear()
{
    std::fill(storage_.begin(), storage_.end(), 0.0);
    factored_ = false;
}

void BandedLU::factor()
{
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t rmax = std::min(n_ - 1, k + kl_);
        // Partial pivot search in column k.
        std::size_t prow = k;
        double pmax = std::fabs(w(k, kl_));
        for (std::size_t r = k + 1; r <= rmax; ++r) {
            const double v = std::fabs(w(r, k - r + kl_));
            if (v > pmax) {
                pmax = v;
                prow = r;
            }
        }
        if (pmax == 0.0)
            throw std::runtime_error("banded: singular matrix at column " + std::to_string(k));
        pivot_[k] = prow;
        if (prow != k) {
            const std::size_t jmax = std::min(n_ - 1, k + kl_ + ku_);
            for (std::size_t j = k; j <= jmax; ++j) {
                double& a = storage_[k * width_ + (j - k + kl_)];
                double& b = storage_[prow * width_ + (j - prow + kl_)];
                std::swap(a, b);
            }
        }
        const double piv = w(k, kl_);
        const std::size_t jmax = std::min(n_ - 1, k + kl_ + ku_);
        for (std::size_t r = k + 1; r <= rmax; ++r) {
            const double mult = w(r, k - r + kl_) / piv;
            w(r, k - r + kl_) = mult;
            if (mult == 0.0)
                continue;
            const double* krow = &storage_[k * width_ + kl_ + 1] - k - 1;
            double* rrow = &storage_[r * width_ + kl_ + 1] - r - 1;
            for (std::size_t j = k + 1; j <= jmax; ++j)
                rrow[j] -= mult * krow[j];
        }
    }
    factored_ = true;
}

void BandedLU::solve(std::vector<double>& rhs) const
{
    if (!factored_)
        throw std::logic_error("banded: solve before factor");
    if (rhs.size() != n_)
        throw std::invalid_argument("banded: rhs size mismatch");
    for (std::size_t k = 0; k < n_; ++k) {
        if (pivot_[k] != k)
            std::swap(rhs[k], rhs[pivot_[k]]);
        const std::size_t rmax = std::min(n_ - 1, k + kl_);
        for (std::size_t r = k + 1; r <= rmax; ++r)
            rhs[r] -= w(r, k - r + kl_) * rhs[k];
    }
    for (std::size_t k = n_; k-- > 0;) {
        const std::size_t jmax = std::min(n_ - 1, k + kl_ + ku_);
        double s = rhs[k];
        for (std::size_t j = k + 1; j <= jmax; ++j)
            s -= w(k, j - k + kl_) * rhs[j];
        rhs[k] = s / w(k, kl_);
    }
}

// ---- solution bookkeeping ----------------------------------------------

void FOMSolution::validate() const
{
    snapshots.validate();
    check(params.rows() == n_mu + 1, "parameter matrix row count");
    check(params.cols() == snapshots.n_columns(), "parameter matrix column count");
}

FOMSolution concat_instances(const std::vector<FOMSolution>& parts)
{
    check(!parts.empty(), "concat_instances: nothing to concatenate");
    const FOMSolution& first = parts.front();
    FOMSolution out;
    out.n_mu = first.n_mu;
    out.snapshots.n_dofs = first.snapshots.n_dofs;
    out.snapshots.n_channels = first.snapshots.n_channels;
    out.snapshots.n_steps = first.snapshots.n_steps;
    std::size_t total_inst = 0;
    for (const auto& p : parts) {
        check(p.snapshots.n_dofs == first.snapshots.n_dofs &&
                  p.snapshots.n_channels == first.snapshots.n_channels &&
                  p.snapshots.n_steps == first.snapshots.n_steps &&
                  p.n_mu == first.n_mu,
              "concat_instances: inconsistent parts");
        total_inst += p.snapshots.n_instances;
    }
    out.snapshots.n_instances = total_inst;
    const std::size_t rows = first.snapshots.data.rows();
    out.snapshots.data = Matrix(rows, total_inst * first.snapshots.n_steps);
    out.params = Matrix(first.n_mu + 1, out.snapshots.data.cols());
    std::size_t col0 = 0;
    for (const auto& p : parts) {
        for (std::size_t j = 0; j < p.snapshots.data.cols(); ++j) {
            for (std::size_t i = 0; i < rows; ++i)
                out.snapshots.data(i, col0 + j) = p.snapshots.data(i, j);
            for (std::size_t i = 0; i < p.params.rows(); ++i)
                out.params(i, col0 + j) = p.params(i, j);
        }
        col0 += p.snapshots.data.cols();
    }
    return out;
}

// ---- Lotka-Volterra -----------------------------------------------------

void lotka_volterra_rhs(double mu, const double* u, double* dudt)
{
    dudt[0] = u[0] * (mu - 0.1 * u[0] - 0.5 * u[1] - 0.5 * u[2]);
    dudt[1] = u[1] * (-mu + 0.5 * u[0] - 0.3 * u[2]);
    dudt[2] = u[2] * (-mu + 0.2 * u[0] + 0.5 * u[1]);
}

FOMSolution solve_lotka_volterra(const LVConfig& cfg, double mu)
{
    check(cfg.dt > 0.0 && cfg.n_steps >= 1, "lv: bad time grid");

    std::vector<double> times(cfg.n_steps);
    for (std::size_t j = 0; j < cfg.n_steps; ++j)
        times[j] = static_cast<double>(j) * cfg.dt;

    OdeOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    const std::vector<double> y0(cfg.initial_state.begin(), cfg.initial_state.end());
    OdeSolution ode = integrate_dopri5(
        [mu](double, const double* y, double* dydt) { lotka_volterra_rhs(mu, y, dydt); },
        y0, times, opts);

    FOMSolution sol;
    sol.n_mu = 1;
    sol.snapshots.n_dofs = 3;
    sol.snapshots.n_channels = 1;
    sol.snapshots.n_instances = 1;
    sol.snapshots.n_steps = cfg.n_steps;
    sol.snapshots.data = Matrix(3, cfg.n_steps);
    sol.params = Matrix(2, cfg.n_steps);
    for (std::size_t j = 0; j < cfg.n_steps; ++j) {
        for (std::size_t i = 0; i < 3; ++i)
            sol.snapshots.data(i, j) = ode.states[j][i];
        sol.params(0, j) = times[j];
        sol.params(1, j) = mu;
    }
    if (!sol.snapshots.data.all_finite())
        throw std::runtime_error("fom: lv trajectory left the finite range");
    return sol;
}

// ---- advection-diffusion-reaction ----------------------------------------

namespace {

struct ADRGrid {
    std::size_t nx, ny, n;
    double hx, hy;
};

// Central 5-point operator for du/dt = mu1 lap(u) - b . grad(u) - c u + f
// with mirror ghost nodes (zero normal derivative; the advective normal
// difference vanishes at walls with the same mirroring). Assembles
// shift * I - L into the banded matrix.
void assemble_shifted_operator(BandedLU& a, const ADRGrid& g, double t, double mu1,
                               double reaction, double shift)
{
    a.clear();
    const double bx = std::cos(t);
    const double by = std::sin(t);
    const double dx2 = mu1 / (g.hx * g.hx);
    const double dy2 = mu1 / (g.hy * g.hy);
    const double ax = bx / (2.0 * g.hx);
    const double ay = by / (2.0 * g.hy);

    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const std::size_t row = j * g.nx + i;
            double diag = shift + reaction + 2.0 * dx2 + 2.0 * dy2;

            // x-direction neighbors (mirrored at the walls).
            if (i == 0) {
                a.at(row, row + 1) += -(2.0 * dx2); // east gets both lap legs, advection cancels
            } else if (i == g.nx - 1) {
                a.at(row, row - 1) += -(2.0 * dx2);
            } else {
                a.at(row, row + 1) += -dx2 + ax;
                a.at(row, row - 1) += -dx2 - ax;
            }
            // y-direction neighbors.
            if (j == 0) {
                a.at(row, row + g.nx) += -(2.0 * dy2);
            } else if (j == g.ny - 1) {
                a.at(row, row - g.nx) += -(2.0 * dy2);
            } else {
                a.at(row, row + g.nx) += -dy2 + ay;
                a.at(row, row - g.nx) += -dy2 - ay;
            }
            a.at(row, row) += diag;
        }
    }
}

std::vector<double> source_vector(const ADRGrid& g, const ADRConfig& cfg,
                                  double mu2, double mu3)
{
    std::vector<double> f(g.n, 0.0);
    const double w2 = cfg.source_width * cfg.source_width;
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double x = static_cast<double>(i) * g.hx;
            const double y = static_cast<double>(j) * g.hy;
            const double r2 = (x - mu2) * (x - mu2) + (y - mu3) * (y - mu3);
            f[j * g.nx + i] = cfg.source_amplitude * std::exp(-r2 / w2);
        }
    }
    return f;
}

} // namespace

FOMSolution solve_adr(const ADRConfig& cfg, const std::array<double, 3>& mu)
{
    check(cfg.nx >= 3 && cfg.ny >= 3, "adr: grid too small");
    check(cfg.dt > 0.0 && cfg.n_steps >= 1, "adr: bad time grid");
    const double mu1 = mu[0];
    check(mu1 > 0.0, "adr: diffusivity must be positive");

    ADRGrid g{cfg.nx, cfg.ny, cfg.nx * cfg.ny,
              1.0 / static_cast<double>(cfg.nx - 1),
              1.0 / static_cast<double>(cfg.ny - 1)};

    const std::vector<double> f = source_vector(g, cfg, mu[1], mu[2]);
    std::vector<double> u_prev(g.n, 0.0); // u(0) = 0
    std::vector<double> u_curr(g.n, 0.0);

    FOMSolution sol;
    sol.n_mu = 3;
    sol.snapshots.n_dofs = g.n;
    sol.snapshots.n_channels = 1;
    sol.snapshots.n_instances = 1;
    sol.snapshots.n_steps = cfg.n_steps;
    sol.snapshots.data = Matrix(g.n, cfg.n_steps);
    sol.params = Matrix(4, cfg.n_steps);

    BandedLU a(g.n, cfg.nx, cfg.nx);
    std::vector<double> rhs(g.n);

    for (std::size_t step = 1; step <= cfg.n_steps; ++step) {
        const double t = static_cast<double>(step) * cfg.dt;
        if (step == 1) {
            // Implicit-Euler bootstrap step.
            assemble_shifted_operator(a, g, t, mu1, cfg.reaction, 1.0 / cfg.dt);
            for (std::size_t i = 0; i < g.n; ++i)
                rhs[i] = u_prev[i] / cfg.dt + f[i];
        } else {
            assemble_shifted_operator(a, g, t, mu1, cfg.reaction, 1.5 / cfg.dt);
            for (std::size_t i = 0; i < g.n; ++i)
                rhs[i] = (4.0 * u_curr[i] - u_prev[i]) / (2.0 * cfg.dt) + f[i];
        }
        a.factor();
        a.solve(rhs);
        if (step == 1) {
            u_curr = rhs;
        } else {
            u_prev = u_curr;
            u_curr = rhs;
        }
        for (std::size_t i = 0; i < g.n; ++i)
            sol.snapshots.data(i, step - 1) = u_curr[i];
        sol.params(0, step - 1) = t;
        sol.params(1, step - 1) = mu[0];
        sol.params(2, step - 1) = mu[1];
        sol.params(3, step - 1) = mu[2];
    }
    if (!sol.snapshots.data.all_finite())
        throw std::runtime_error("fom: adr solution left the finite range");
    return sol;
}

// ---- parameter grids ------------------------------------------------------

std::vector<double> uniform_grid(double lo, double hi, std::size_t count)
{
    check(count >= 1, "uniform_grid: empty range");
    check(hi >= lo, "uniform_grid: inverted range");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo + static_cast<double>(i) * step;
    return g;
}

std::vector<double> interval_midpoints(const std::vector<double>& grid)
{
    check(grid.size() >= 2, "interval_midpoints: need at least two grid values");
    std::vector<double> m(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        m[i] = 0.5 * (grid[i] + grid[i + 1]);
    return m;
}

std::vector<double> lv_training_mus()
{
    return uniform_grid(1.0, 3.0, 21);
}

std::vector<double> lv_test_mus()
{
    return interval_midpoints(lv_training_mus());
}

std::vector<std::array<double, 3>> adr_training_mus()
{
    const auto g1 = uniform_grid(0.002, 0.005, 4);
    const auto g23 = uniform_grid(0.4, 0.6, 5);
    std::vector<std::array<double, 3>> out;
    out.reserve(g1.size() * g23.size() * g23.size());
    for (double a : g1)
        for (double b : g23)
            for (double c : g23)
                out.push_back({a, b, c});
    return out;
}

std::vector<std::array<double, 3>> adr_test_mus()
{
    const auto g1 = interval_midpoints(uniform_grid(0.002, 0.005, 4));
    const auto g23 = interval_midpoints(uniform_grid(0.4, 0.6, 5));
    std::vector<std::array<double, 3>> out;
    out.reserve(g1.size() * g23.size() * g23.size());
    for (double a : g1)
        for (double b : g23)
            for (double c : g23)
                out.push_back({a, b, c});
    return out;
}

} // namespace rom
