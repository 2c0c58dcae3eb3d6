#ifndef ROM_METRICS_HPP
#define ROM_METRICS_HPP

#include "rom/matrix.hpp"
#include "rom/timing.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rom {

// Mean over test instances of the trajectory-relative L2 error
//   sqrt(sum_k |u_k - v_k|^2) / sqrt(sum_k |u_k|^2).
// Columns are instance-major; throws if a denominator vanishes.
double eps_rel(const Matrix& truth, const Matrix& approx, std::size_t n_test,
               std::size_t n_steps);

// Pointwise relative error field |u - v| / rms_norm, where rms_norm is
// the per-instance time-averaged state norm sqrt(mean_k |u_k|^2).
struct EpsKStats {
    double mean = 0.0;
    double max = 0.0;
    std::vector<double> samples; // every entry, instance-major
};
EpsKStats eps_k(const Matrix& truth, const Matrix& approx, std::size_t n_test,
                std::size_t n_steps);

// Percentile bootstrap interval for the sample mean. Resample r draws
// `samples.size()` indices through Rng(seed) (modulo mapping); the
// returned bounds are the floor(q_lo (R-1)) and ceil(q_hi (R-1)) order
// statistics of the resampled means.
std::pair<double, double> bootstrap_ci(const std::vector<double>& samples, double level,
                                       std::size_t n_resamples, std::uint64_t seed);

struct EvaluationReport {
    double eps_rel_value = 0.0;
    double eps_k_mean = 0.0;
    double eps_k_max = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    TimingStats t_nn;
    TimingStats t_rec;
    std::size_t decoder_queries_per_instance = 0;
    std::size_t rollout_encoder_queries = 0;
    double rollout_max_abs = 0.0;
    double training_max_abs = 0.0;
    bool rollout_divergence = false;

    std::string to_json() const;
};

} // namespace rom

#endif
