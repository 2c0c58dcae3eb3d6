#ifndef ROM_CHECKPOINT_HPP
#define ROM_CHECKPOINT_HPP

#include "rom/forecast_model.hpp"
#include "rom/param_seq_model.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace rom {

// On-disk model bundle: a directory holding manifest.json (format
// version, architecture dims, hyperparameters, seeds, training summary,
// input scaler) and weights.bin (named tensors: u32 name length, UTF-8
// name, u32 rank, u32 dims[], little-endian f64 payload). The POD basis
// blocks, singular values and reduced-coordinate scaling travel in
// weights.bin alongside the network parameters.
struct Checkpoint {
    nlohmann::json manifest;
    std::vector<std::pair<std::string, Matrix>> tensors;

    const Matrix* find(const std::string& name) const;
};

constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const std::string& dir, const Checkpoint& ck);
// Throws on a missing directory or a format-version mismatch.
Checkpoint load_checkpoint(const std::string& dir);

// JSON mirrors of the model/training configurations.
void to_json(nlohmann::json& j, const ParamSeqConfig& c);
void from_json(const nlohmann::json& j, ParamSeqConfig& c);
void to_json(nlohmann::json& j, const ForecastConfig& c);
void from_json(const nlohmann::json& j, ForecastConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct MuCheckpointData {
    ParamSeqModel model;
    PODBasis basis;
    ScalingRecord scaling;
};

struct TCheckpointData {
    ForecastModel model;
    PODBasis basis;
    ScalingRecord scaling;
};

Checkpoint make_mu_checkpoint(ParamSeqModel& model, const PODBasis& basis,
                              const ScalingRecord& scaling, const TrainHistory& history,
                              std::uint64_t seed);
Checkpoint make_t_checkpoint(ForecastModel& model, const PODBasis& basis,
                             const ScalingRecord& scaling, const TrainHistory& history,
                             std::uint64_t seed);

MuCheckpointData mu_from_checkpoint(const Checkpoint& ck);
TCheckpointData t_from_checkpoint(const Checkpoint& ck);

} // namespace rom

#endif
