#ifndef ROM_FOM_HPP
#define ROM_FOM_HPP

#include "rom/pod.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace rom {

// Snapshots plus the aligned (t, mu) bookkeeping matrix: column j of
// `params` holds the time stamp and parameter values of snapshot column j.
struct FOMSolution {
    SnapshotMatrix snapshots;
    Matrix params; // (n_mu + 1) x n_columns, row 0 = time
    std::size_t n_mu = 0;

    void validate() const;
};

FOMSolution concat_instances(const std::vector<FOMSolution>& parts);

// Three-species competition system with one parameter controlling prey
// growth and predator mortality.
struct LVConfig {
    double dt = 0.1;
    std::size_t n_steps = 100; // samples at t = 0, dt, ..., (n_steps-1) dt
    std::array<double, 3> initial_state{0.5, 0.5, 0.5};
    double rel_tol = 1e-9;
    double abs_tol = 1e-9;
};

void lotka_volterra_rhs(double mu, const double* u, double* dudt);
FOMSolution solve_lotka_volterra(const LVConfig& cfg, double mu);

// Advection-diffusion-reaction problem on the unit square with a rotating
// advection field, a Gaussian source located at (mu2, mu3), diffusivity
// mu1 and homogeneous Neumann walls. Second-order central finite
// differences in space, BDF2 in time (implicit-Euler bootstrap step).
struct ADRConfig {
    std::size_t nx = 32;
    std::size_t ny = 32;
    double dt = 2.0 * 3.14159265358979323846 / 20.0;
    std::size_t n_steps = 100; // samples at t = dt, ..., n_steps * dt
    double reaction = 1.0;
    double source_amplitude = 10.0;
    double source_width = 0.07;
};

FOMSolution solve_adr(const ADRConfig& cfg, const std::array<double, 3>& mu);

// Deterministic equally spaced grids over closed intervals.
std::vector<double> uniform_grid(double lo, double hi, std::size_t count);
// Midpoints of consecutive grid values (the default held-out test set).
std::vector<double> interval_midpoints(const std::vector<double>& grid);

std::vector<double> lv_training_mus();                 // 21 values on [1, 3]
std::vector<double> lv_test_mus();                     // 20 interval midpoints
std::vector<std::array<double, 3>> adr_training_mus(); // 4 x 5 x 5 grid
std::vector<std::array<double, 3>> adr_test_mus();     // midpoint grid

} // namespace rom

#endif
