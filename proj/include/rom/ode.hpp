#ifndef ROM_ODE_HPP
#define ROM_ODE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace rom {

// Right-hand side callback: dydt = f(t, y).
using OdeRhs = std::function<void(double t, const double* y, double* dydt)>;

struct OdeOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-9;
    double initial_step = 0.0;   // 0 = choose automatically
    std::size_t max_steps = 2000000;
};

struct OdeSolution {
    // One state per requested sample time, evaluated with the 4th-order
    // dense interpolant of the accepted 5th-order steps.
    std::vector<std::vector<double>> states;
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;
};

// Adaptive Dormand-Prince 5(4) integration from sample_times.front() to
// sample_times.back(). Sample times must be non-decreasing. Throws if the
// step size underflows or the step budget is exhausted.
OdeSolution integrate_dopri5(const OdeRhs& f, const std::vector<double>& y0,
                             const std::vector<double>& sample_times,
                             const OdeOptions& opts = {});

// Fixed-step classic RK4 sampled at the given times (reference scheme for
// convergence checks; sample times must be reachable by whole steps).
OdeSolution integrate_rk4_fixed(const OdeRhs& f, const std::vector<double>& y0,
                                const std::vector<double>& sample_times, double dt);

} // namespace rom

#endif
