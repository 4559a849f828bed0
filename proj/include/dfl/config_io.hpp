#pragma once

#include <string>

#include "json.hpp"

#include "dfl/sim.hpp"

namespace dfl {

inline constexpr int kConfigSchemaVersion = 1;

// Config file schema (JSON, versioned). Every CLI flag maps onto one of
// these fields; unknown keys are rejected so typos fail loudly.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& cfg);

// Run summary with the Table-style grouped means and the effective config.
nlohmann::json summary_to_json(const ExperimentConfig& cfg, const ExperimentResult& res);
void write_summary_json(const std::string& path, const ExperimentConfig& cfg,
                        const ExperimentResult& res);

}  // namespace dfl
