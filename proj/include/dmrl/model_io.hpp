#pragma once

#include "dmrl/reward.hpp"

#include <json.hpp>

#include <filesystem>

namespace dmrl::reward {

/// {feature_dim, standardizer{mean[],scale[]}, kernel{lengthscale,amplitude},
///  lambda, beta, delta, inducing[[...]], alpha[]}. Inducing points are in
/// standardized units. Doubles are written in shortest round-trip form, so
/// loading a saved model reproduces it bit for bit.
nlohmann::json to_json(const RewardModel& model);
RewardModel model_from_json(const nlohmann::json& doc);

/// Writes `doc` (a model document, possibly with extra keys such as "config").
void save_json(const std::filesystem::path& path, const nlohmann::json& doc);
RewardModel load_model(const std::filesystem::path& path);

}  // namespace dmrl::reward
