#include "rom/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rom {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;

// Error coefficients (5th minus 4th order weights).
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Dense-output coefficients (Hairer-Norsett-Wanner continuous extension).
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

} // namespace

OdeSolution integrate_dopri5(const OdeRhs& f, const std::vector<double>& y0,
                             const std::vector<double>& sample_times,
                             const OdeOptions& opts)
{
    if (sample_times.empty())
        throw std::invalid_argument("ode: no sample times given");
    for (std::size_t i = 1; i < sample_times.size(); ++i)
        if (sample_times[i] < sample_times[i - 1])
            throw std::invalid_argument("ode: sample times must be non-decreasing");

    const std::size_t n = y0.size();
    const double t_end = sample_times.back();

    std::vector<double> y = y0, ynew(n), yerr(n), ysti(n);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    std::vector<double> r1(n), r2(n), r3(n), r4(n), r5(n);

    OdeSolution sol;
    sol.states.reserve(sample_times.size());

    double t = sample_times.front();
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
        sol.states.push_back(y);
        ++next_sample;
    }
    if (next_sample == sample_times.size())
        return sol;

    f(t, y.data(), k1.data());

    // Initial step from a crude |y| / |f| estimate.
    double h = opts.initial_step;
    if (h <= 0.0) {
        double ny = 0.0, nf = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            ny += y[i] * y[i];
            nf += k1[i] * k1[i];
        }
        h = (nf > 0.0) ? 0.01 * std::sqrt(ny / nf) : 1e-6;
        h = std::min(h, t_end - t);
        h = std::max(h, 1e-10);
    }

    std::size_t steps = 0;
    while (t < t_end) {
        if (++steps > opts.max_steps)
            throw std::runtime_error("ode: step budget exhausted");
        if (t + h > t_end)
            h = t_end - t;
        if (h <= std::fabs(t) * 1e-15)
            throw std::runtime_error("ode: step size underflow");

        for (std::size_t i = 0; i < n; ++i)
            ysti[i] = y[i] + h * a21 * k1[i];
        f(t + c2 * h, ysti.data(), k2.data());
        for (std::size_t i = 0; i < n; ++i)
            ysti[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        f(t + c3 * h, ysti.data(), k3.data());
        for (std::size_t i = 0; i < n; ++i)
            ysti[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        f(t + c4 * h, ysti.data(), k4.data());
        for (std::size_t i = 0; i < n; ++i)
            ysti[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        f(t + c5 * h, ysti.data(), k5.data());
        for (std::size_t i = 0; i < n; ++i)
            ysti[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        f(t + h, ysti.data(), k6.data());
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(t + h, ynew.data(), k7.data());

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sk = opts.abs_tol +
                              opts.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            const double r = yerr[i] / sk;
            err += r * r;
        }
        err = std::sqrt(err / static_cast<double>(n));

        if (err <= 1.0) {
            // Accepted; fill the dense interpolant and emit samples in (t, t+h].
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = ynew[i] - y[i];
                const double bspl = h * k1[i] - ydiff;
                r1[i] = y[i];
                r2[i] = ydiff;
                r3[i] = bspl;
                r4[i] = ydiff - h * k7[i] - bspl;
                r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                             d6 * k6[i] + d7 * k7[i]);
            }
            while (next_sample < sample_times.size() && sample_times[next_sample] <= t + h) {
                const double theta = (sample_times[next_sample] - t) / h;
                const double theta1 = 1.0 - theta;
                std::vector<double> ys(n);
                for (std::size_t i = 0; i < n; ++i)
                    ys[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
                sol.states.push_back(std::move(ys));
                ++next_sample;
            }
            t += h;
            y = ynew;
            k1 = k7; // FSAL
            ++sol.n_accepted;
            const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
            h *= fac;
        } else {
            ++sol.n_rejected;
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    // Emit any samples coinciding with the final time within round-off.
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t + 1e-12) {
        sol.states.push_back(y);
        ++next_sample;
    }
    if (next_sample != sample_times.size())
        throw std::runtime_error("ode: integration ended before the last sample time");
    return sol;
}

OdeSolution integrate_rk4_fixed(const OdeRhs& f, const std::vector<double>& y0,
                                const std::vector<double>& sample_times, double dt)
{
    if (sample_times.empty() || dt <= 0.0)
        throw std::invalid_argument("ode: bad rk4 arguments");
    const std::size_t n = y0.size();
    std::vector<double> y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);

    OdeSolution sol;
    double t = sample_times.front();
    std::size_t next_sample = 0;
    auto emit_due = [&]() {
        while (next_sample < sample_times.size() &&
               sample_times[next_sample] <= t + dt * 1e-6) {
            sol.states.push_back(y);
            ++next_sample;
        }
    };
    emit_due();
    while (next_sample < sample_times.size()) {
        f(t, y.data(), k1.data());
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        f(t + 0.5 * dt, tmp.data(), k2.data());
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        f(t + 0.5 * dt, tmp.data(), k3.data());
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + dt * k3[i];
        f(t + dt, tmp.data(), k4.data());
        for (std::size_t i = 0; i < n; ++i)
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += dt;
        ++sol.n_accepted;
        emit_due();
    }
    return sol;
}

} // namespace rom
