#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgldlab/core_model.hpp"
#include "sgldlab/posterior_privacy.hpp"

namespace sgldlab {

void to_json(nlohmann::json& j, const ModelParams& m);
void from_json(const nlohmann::json& j, ModelParams& m);

void to_json(nlohmann::json& j, const DomainSpec& s);
void from_json(const nlohmann::json& j, DomainSpec& s);

void to_json(nlohmann::json& j, const PrivacyBudget& b);
void from_json(const nlohmann::json& j, PrivacyBudget& b);

// One experiment: the problem instance, the privacy target, the plotting
// range, the seed list, and where outputs go.
struct ExperimentConfig {
  DomainSpec spec;
  ModelParams model;
  PrivacyBudget budget{1.0, 0.05};
  long long epochs = 0;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path output_dir = ".";
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sgldlab
