#include "sgldlab/config_json.hpp"

#include <fstream>

namespace sgldlab {

void to_json(nlohmann::json& j, const ModelParams& m) {
  j = nlohmann::json{{"alpha", m.alpha}, {"beta", m.beta}};
}

void from_json(const nlohmann::json& j, ModelParams& m) {
  j.at("alpha").get_to(m.alpha);
  j.at("beta").get_to(m.beta);
}

void to_json(nlohmann::json& j, const DomainSpec& s) {
  j = nlohmann::json{{"n", s.n},     {"c", s.c},     {"gamma1", s.gamma1},
                     {"x_l", s.x_l}, {"x_h", s.x_h}};
  if (s.gamma2) j["gamma2"] = *s.gamma2;
}

void from_json(const nlohmann::json& j, DomainSpec& s) {
  j.at("n").get_to(s.n);
  j.at("c").get_to(s.c);
  j.at("gamma1").get_to(s.gamma1);
  j.at("x_l").get_to(s.x_l);
  j.at("x_h").get_to(s.x_h);
  if (j.contains("gamma2")) s.gamma2 = j.at("gamma2").get<double>();
}

void to_json(nlohmann::json& j, const PrivacyBudget& b) {
  j = nlohmann::json{{"epsilon", b.epsilon}, {"delta", b.delta}};
}

void from_json(const nlohmann::json& j, PrivacyBudget& b) {
  j.at("epsilon").get_to(b.epsilon);
  j.at("delta").get_to(b.delta);
}

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{{"spec", c.spec},       {"model", c.model},
                     {"budget", c.budget},   {"epochs", c.epochs},
                     {"seeds", c.seeds},     {"output_dir", c.output_dir.string()}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  j.at("spec").get_to(c.spec);
  j.at("model").get_to(c.model);
  if (j.contains("budget")) j.at("budget").get_to(c.budget);
  if (j.contains("epochs")) j.at("epochs").get_to(c.epochs);
  if (j.contains("seeds")) j.at("seeds").get_to(c.seeds);
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace sgldlab
