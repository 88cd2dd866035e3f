#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sosvi/errors.hpp"
#include "sosvi/estimators.hpp"
#include "sosvi/model.hpp"
#include "sosvi/optimizer.hpp"

namespace sosvi::harness {

/// A configuration problem; the message starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& problem);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ModelSpec {
  std::string name;  ///< conjugate-gaussian | bayes-linreg | bayes-logreg
  nlohmann::json params = nlohmann::json::object();
  /// Resolved against the config file's directory.
  std::optional<std::filesystem::path> dataset;
  /// Rows given inline instead of a dataset file.
  std::optional<std::vector<std::vector<double>>> inline_data;
};

/// Settings for one scheme after merging the base sections with its overrides.
struct SchemePlan {
  opt::Scheme scheme = opt::Scheme::first_order;
  est::EstimatorConfig estimator;
  std::size_t elbo_samples = 0;  ///< 0 means grad_samples
  opt::StepControl step;
  opt::ConvergenceCriterion convergence;
};

struct ExperimentConfig {
  ModelSpec model;
  double init_mean = 0.0;
  double init_log_scale = 0.0;
  std::vector<SchemePlan> schemes;
  std::vector<std::uint64_t> seeds;
  double kl_threshold = 1e-2;
  /// Threshold on the gradient norm when the model has no exact posterior.
  double grad_threshold = 1e-1;
  std::filesystem::path output_dir = "out";
  bool record_wallclock = true;
  bool write_manifest = true;
  /// Raw document, kept so a scheme added by an override can be planned.
  nlohmann::json source;

  /// Plan for `scheme`, built from the base sections and its overrides.
  SchemePlan plan_for(opt::Scheme scheme) const;
};

ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::string> scheme;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> max_iterations;
  std::optional<std::filesystem::path> output_dir;
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& overrides);

model::LogJointModel build_model(const ModelSpec& spec);

/// The fully resolved configuration, for the run manifest.
nlohmann::json resolved_json(const ExperimentConfig& cfg);

std::string_view score_weight_name(est::ScoreWeight weight);

}  // namespace sosvi::harness
