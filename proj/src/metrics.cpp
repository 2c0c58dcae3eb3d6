#include "rom/metrics.hpp"

#include "rom/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rom {

namespace {

void check(bool ok, const char* what)
{
    if (!ok)
        throw std::invalid_argument(std::string("metrics: ") + what);
}

void check_shapes(const Matrix& truth, const Matrix& approx, std::size_t n_test,
                  std::size_t n_steps)
{
    check(truth.rows() == approx.rows() && truth.cols() == approx.cols(),
          "matrices must have equal shape");
    check(truth.cols() == n_test * n_steps, "column count must be n_test * n_steps");
    check(n_test >= 1 && n_steps >= 1, "empty evaluation set");
}

} // namespace

double eps_rel(const Matrix& truth, const Matrix& approx, std::size_t n_test,
               std::size_t n_steps)
{
    check_shapes(truth, approx, n_test, n_steps);
    double acc = 0.0;
    for (std::size_t inst = 0; inst < n_test; ++inst) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const std::size_t col = inst * n_steps + k;
            for (std::size_t i = 0; i < truth.rows(); ++i) {
                const double u = truth(i, col);
                const double d = u - approx(i, col);
                num += d * d;
                den += u * u;
            }
        }
        if (den == 0.0)
            throw std::runtime_error("metrics: eps_rel reference trajectory has zero norm");
        acc += std::sqrt(num) / std::sqrt(den);
    }
    return acc / static_cast<double>(n_test);
}

EpsKStats eps_k(const Matrix& truth, const Matrix& approx, std::size_t n_test,
                std::size_t n_steps)
{
    check_shapes(truth, approx, n_test, n_steps);
    EpsKStats stats;
    stats.samples.reserve(truth.rows() * truth.cols());
    for (std::size_t inst = 0; inst < n_test; ++inst) {
        double den = 0.0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const std::size_t col = inst * n_steps + k;
            for (std::size_t i = 0; i < truth.rows(); ++i)
                den += truth(i, col) * truth(i, col);
        }
        den = std::sqrt(den / static_cast<double>(n_steps));
        if (den == 0.0)
            throw std::runtime_error("metrics: eps_k reference trajectory has zero norm");
        for (std::size_t k = 0; k < n_steps; ++k) {
            const std::size_t col = inst * n_steps + k;
            for (std::size_t i = 0; i < truth.rows(); ++i) {
                const double e = std::fabs(truth(i, col) - approx(i, col)) / den;
                stats.samples.push_back(e);
            }
        }
    }
    double sum = 0.0;
    for (double e : stats.samples) {
        sum += e;
        stats.max = std::max(stats.max, e);
    }
    stats.mean = sum / static_cast<double>(stats.samples.size());
    return stats;
}

std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, double level,
                                       std::size_t n_resamples, std::uint64_t seed)
{
    check(!samples.empty(), "bootstrap on empty sample set");
    check(level > 0.0 && level < 1.0, "confidence level outside (0, 1)");
    check(n_resamples >= 2, "need at least two resamples");

    const std::size_t n = samples.size();
    Rng rng(seed);
    std::vector<double> means(n_resamples);
    for (std::size_t r = 0; r < n_resamples; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += samples[rng.below(n)];
        means[r] = s / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());
    const double q_lo = (1.0 - level) / 2.0;
    const double q_hi = 1.0 - q_lo;
    const auto idx_lo = static_cast<std::size_t>(
        std::floor(q_lo * static_cast<double>(n_resamples - 1)));
    const auto idx_hi = static_cast<std::size_t>(
        std::ceil(q_hi * static_cast<double>(n_resamples - 1)));
    return {means[idx_lo], means[idx_hi]};
}

std::string EvaluationReport::to_json() const
{
    nlohmann::json j;
    j["eps_rel"] = eps_rel_value;
    j["eps_k_mean"] = eps_k_mean;
    j["eps_k_max"] = eps_k_max;
    j["eps_k_mean_ci"] = {ci_lo, ci_hi};
    j["t_nn"] = {{"min", t_nn.min}, {"mean", t_nn.mean()}, {"max", t_nn.max}};
    j["t_rec"] = {{"min", t_rec.min}, {"mean", t_rec.mean()}, {"max", t_rec.max}};
    j["decoder_queries_per_instance"] = decoder_queries_per_instance;
    j["rollout_encoder_queries"] = rollout_encoder_queries;
    j["rollout_max_abs"] = rollout_max_abs;
    j["training_max_abs"] = training_max_abs;
    j["rollout_divergence"] = rollout_divergence;
    return j.dump(2);
}

} // namespace rom
