#pragma once

#include "transport/dataset.hpp"
#include "transport/estimators.hpp"
#include "transport/models.hpp"
#include "transport/partition.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace transport {

// End-to-end fit -> partition -> estimate run on one dataset.
struct PipelineConfig {
  GlmFamily outcome_family = GlmFamily::gaussian_identity;
  ExclusionRule rule;
  std::optional<double> p3_star;  // absent: untrimmed estimators only
  double epsilon = 1e-8;
  std::optional<double> known_propensity;
  std::vector<Eigen::Index> sampling_columns;
  std::vector<Eigen::Index> propensity_columns;
  std::vector<Eigen::Index> outcome_columns;
  std::vector<Method> methods{Method::ipw, Method::aipw};
  bool include_untrimmed = true;
  VarianceMethod variance = VarianceMethod::sandwich;
  InclusionJacobian inclusion_jacobian = InclusionJacobian::frozen;
  int bootstrap_reps = 500;
  std::uint64_t seed = 0;
};

struct PipelineResult {
  NuisanceFits fits;
  std::optional<PartitionResult> partition;
  std::vector<EstimateReport> estimates;

  const EstimateReport* find(Method method, bool trimmed) const;
};

NuisanceFits fit_nuisance(const Dataset& data, const PipelineConfig& config, bool need_outcome);

// Point estimates only, in the order run_pipeline reports them.
Eigen::VectorXd pipeline_point_estimates(const Dataset& data, const PipelineConfig& config);

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config);

}  // namespace transport
