#pragma once

#include <nlohmann/json.hpp>

#include "hgpop/direct_mle.hpp"
#include "hgpop/latent_model.hpp"
#include "hgpop/simulator.hpp"

namespace hgpop {

// JSON mappings for the config structs. Missing keys keep their defaults;
// unknown keys are rejected so typos do not pass silently.

void to_json(nlohmann::ordered_json& j, const PenaltyConfig& c);
void from_json(const nlohmann::ordered_json& j, PenaltyConfig& c);

void to_json(nlohmann::ordered_json& j, const AdamConfig& c);
void from_json(const nlohmann::ordered_json& j, AdamConfig& c);

void to_json(nlohmann::ordered_json& j, const SimulationConfig& c);
void from_json(const nlohmann::ordered_json& j, SimulationConfig& c);

void to_json(nlohmann::ordered_json& j, const NetworkSpec& c);
void from_json(const nlohmann::ordered_json& j, NetworkSpec& c);

void to_json(nlohmann::ordered_json& j, const TrainConfig& c);
void from_json(const nlohmann::ordered_json& j, TrainConfig& c);

void to_json(nlohmann::ordered_json& j, const OptimizerConfig& c);
void from_json(const nlohmann::ordered_json& j, OptimizerConfig& c);

}  // namespace hgpop
