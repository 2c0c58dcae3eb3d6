#ifndef ROM_TESTS_ORACLES_HPP
#define ROM_TESTS_ORACLES_HPP

// Brute-force reference implementations used only by the test suite.
// Everything here is deliberately written in the most literal way
// possible and stays independent of the library's computational paths.

#include "rom/matrix.hpp"
#include "rom/rng.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// Plain triple-loop matrix product.
inline rom::Matrix matmul(const rom::Matrix& a, const rom::Matrix& b)
{
    rom::Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline rom::Matrix random_matrix(std::size_t r, std::size_t c, rom::Rng& rng,
                                 double scale = 1.0)
{
    rom::Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            m(i, j) = scale * rng.normal();
    return m;
}

// Exact singular values of a (rows >= cols) matrix through a self-contained
// cyclic Jacobi eigensolver on the Gram matrix. Descending order.
inline std::vector<double> exact_singular_values(const rom::Matrix& s)
{
    const std::size_t n = s.cols();
    std::vector<std::vector<double>> g(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < s.rows(); ++k)
                acc += s(k, i) * s(k, j);
            g[i][j] = acc;
        }
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off += g[p][q] * g[p][q];
        if (off < 1e-26)
            break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(g[p][q]) < 1e-300)
                    continue;
                const double tau = (g[q][q] - g[p][p]) / (2.0 * g[p][q]);
                const double t = (tau >= 0.0)
                    ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                    : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = g[k][p], akq = g[k][q];
                    g[k][p] = c * akp - sn * akq;
                    g[k][q] = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = g[p][k], aqk = g[q][k];
                    g[p][k] = c * apk - sn * aqk;
                    g[q][k] = sn * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> sv(n);
    for (std::size_t i = 0; i < n; ++i)
        sv[i] = std::sqrt(std::max(g[i][i], 0.0));
    std::sort(sv.begin(), sv.end(), std::greater<double>());
    return sv;
}

// Scalar-loop dense layer: y = act(W x + b), one output at a time.
inline std::vector<double> dense_scalar(const std::vector<std::vector<double>>& w,
                                        const std::vector<double>& b,
                                        const std::vector<double>& x,
                                        const char* activation)
{
    std::vector<double> y(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < x.size(); ++j)
            s += w[i][j] * x[j];
        if (std::string_view(activation) == "tanh")
            s = std::tanh(s);
        else if (std::string_view(activation) == "sigmoid")
            s = 1.0 / (1.0 + std::exp(-s));
        else if (std::string_view(activation) == "elu")
            s = s > 0.0 ? s : std::exp(s) - 1.0;
        y[i] = s;
    }
    return y;
}

// Scalar forget-gate LSTM step for a 1-dimensional cell.
struct ScalarLSTM1 {
    double wi, wf, wg, wo; // input weights
    double ui, uf, ug, uo; // recurrent weights
    double bi, bf, bg, bo; // biases

    static double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

    void step(double x, double& h, double& c) const
    {
        const double i = sig(wi * x + ui * h + bi);
        const double f = sig(wf * x + uf * h + bf);
        const double g = std::tanh(wg * x + ug * h + bg);
        const double o = sig(wo * x + uo * h + bo);
        c = f * c + i * g;
        h = o * std::tanh(c);
    }
};

// Two Adam steps on a scalar parameter, written out longhand.
inline double adam_two_steps_scalar(double theta, double g1, double g2, double lr,
                                    double beta1, double beta2, double eps)
{
    double m = 0.0, v = 0.0;
    // step 1
    m = beta1 * m + (1 - beta1) * g1;
    v = beta2 * v + (1 - beta2) * g1 * g1;
    theta -= lr * (m / (1 - beta1)) / (std::sqrt(v / (1 - beta2)) + eps);
    // step 2
    m = beta1 * m + (1 - beta1) * g2;
    v = beta2 * v + (1 - beta2) * g2 * g2;
    theta -= lr * (m / (1 - std::pow(beta1, 2))) /
             (std::sqrt(v / (1 - std::pow(beta2, 2))) + eps);
    return theta;
}

// Central finite difference of a scalar function of one matrix entry.
template <typename F>
double central_difference(F&& f, double& entry, double h = 1e-6)
{
    const double saved = entry;
    entry = saved + h;
    const double fp = f();
    entry = saved - h;
    const double fm = f();
    entry = saved;
    return (fp - fm) / (2.0 * h);
}

// Relative gradient mismatch with a unit floor, suitable for comparing
// analytic and finite-difference values around O(1) losses.
inline double rel_err(double a, double b)
{
    return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

} // namespace oracle

#endif
