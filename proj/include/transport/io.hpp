#pragma once

#include "transport/dataset.hpp"
#include "transport/error.hpp"
#include "transport/estimators.hpp"
#include "transport/models.hpp"
#include "transport/partition.hpp"
#include "transport/pipeline.hpp"
#include "transport/sensitivity.hpp"
#include "transport/simulation.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace transport {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Which CSV header names play which role. Auxiliary columns are read for
// exclusion rules only and never enter a model.
struct ColumnRoles {
  std::string s_column = "S";
  std::string a_column = "A";
  std::string y_column = "Y";
  std::vector<std::string> covariate_columns;
  std::vector<std::string> aux_columns;
};

Dataset read_dataset(std::istream& in, const ColumnRoles& roles);
Dataset load_dataset(const std::filesystem::path& path, const ColumnRoles& roles);

struct SensitivityConfig {
  Assumption assumption = Assumption::gpd;
  Method method = Method::aipw;
  std::vector<double> k1_grid{1.0};
  std::vector<double> k2_grid{1.0};
  std::optional<std::array<double, 2>> zeta;  // overrides the extrapolated values
  // Per-group (R1, R2) trial-row filters. A nonempty filter refits the outcome
  // models on the matching trial rows before extrapolating to that group.
  std::array<ExclusionRule, 2> surrogate_rows;
};

struct AnalysisConfig {
  std::filesystem::path input;
  ColumnRoles roles;
  GlmFamily outcome_family = GlmFamily::gaussian_identity;
  std::optional<double> p3_star;
  double epsilon = 1e-8;
  ExclusionRule rule;
  std::vector<Method> methods{Method::ipw, Method::aipw};
  VarianceMethod variance = VarianceMethod::sandwich;
  InclusionJacobian inclusion_jacobian = InclusionJacobian::frozen;
  int bootstrap_reps = 500;
  std::optional<double> known_propensity;
  std::uint64_t seed = 0;
  int histogram_bins = 20;
  std::optional<SensitivityConfig> sensitivity;

  void validate() const;
  PipelineConfig pipeline() const;
};

// Relative input paths are resolved against `base_dir`.
AnalysisConfig parse_analysis_config(const Json& j, const std::filesystem::path& base_dir = {});
StudyConfig parse_study_config(const Json& j);
ExclusionRule parse_exclusion_rule(const Json& j);

Json read_json(const std::filesystem::path& path);
AnalysisConfig load_analysis_config(const std::filesystem::path& path);
StudyConfig load_study_config(const std::filesystem::path& path);

Json to_json(const GlmFit& fit, const std::vector<std::string>& names);
Json to_json(const EstimateReport& e);
Json to_json(const PartitionResult& p);

// Full analysis on an already loaded dataset.
Json analyze(const AnalysisConfig& config, const Dataset& data);
Json cmd_analyze(const AnalysisConfig& config);

// Sweep for the configured method's trimmed estimate in `report`. The grids
// always contain k = 1 so the untilted reference point is present.
SensitivityGrid cmd_sensitivity(const AnalysisConfig& config, const Json& report);

StudyReport cmd_simulate(const StudyConfig& config);

int exit_code(const Error& e);

}  // namespace transport
