#include "transport/pipeline.hpp"

#include "transport/error.hpp"

#include <algorithm>

namespace transport {

const EstimateReport* PipelineResult::find(Method method, bool trimmed) const {
  for (const auto& e : estimates)
    if (e.method == method && e.trimmed == trimmed) return &e;
  return nullptr;
}

NuisanceFits fit_nuisance(const Dataset& data, const PipelineConfig& config, bool need_outcome) {
  NuisanceFits fits{fit_sampling_score(data, config.sampling_columns),
                    fit_propensity_score(data, config.known_propensity, config.propensity_columns),
                    std::nullopt};
  if (need_outcome)
    fits.outcome = fit_outcome_models(data, config.outcome_family, config.outcome_columns);
  return fits;
}

namespace {

struct Slot {
  Method method;
  bool trimmed;
};

std::vector<Slot> slots(const PipelineConfig& config) {
  std::vector<Slot> out;
  for (bool trimmed : {true, false}) {
    if (trimmed && !config.p3_star) continue;
    if (!trimmed && config.p3_star && !config.include_untrimmed) continue;
    for (Method m : config.methods) out.push_back({m, trimmed});
  }
  return out;
}

bool needs_outcome(const PipelineConfig& config) {
  return std::find(config.methods.begin(), config.methods.end(), Method::aipw) !=
         config.methods.end();
}

PipelineResult run_core(const Dataset& data, const PipelineConfig& config, VarianceMethod variance) {
  data.validate();
  PipelineResult result;
  result.fits = fit_nuisance(data, config, needs_outcome(config));
  if (config.p3_star)
    result.partition = partition_population(data, result.fits.sampling, result.fits.propensity,
                                            config.rule, *config.p3_star, config.epsilon);
  const EstimateOptions options{variance, config.inclusion_jacobian};
  for (const Slot& slot : slots(config)) {
    const PartitionResult* part = slot.trimmed ? &*result.partition : nullptr;
    if (slot.method == Method::ipw) {
      result.estimates.push_back(
          part ? trimmed_ipw(data, result.fits.sampling, result.fits.propensity, *part, options)
               : hajek_ipw(data, result.fits.sampling, result.fits.propensity, options));
    } else {
      result.estimates.push_back(part ? trimmed_aipw(data, result.fits, *part, options)
                                      : augmented_ipw(data, result.fits, options));
    }
  }
  return result;
}

}  // namespace

Eigen::VectorXd pipeline_point_estimates(const Dataset& data, const PipelineConfig& config) {
  const PipelineResult r = run_core(data, config, VarianceMethod::none);
  Eigen::VectorXd out(static_cast<Eigen::Index>(r.estimates.size()));
  for (std::size_t j = 0; j < r.estimates.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = r.estimates[j].estimate;
  return out;
}

PipelineResult run_pipeline(const Dataset& data, const PipelineConfig& config) {
  if (config.variance != VarianceMethod::bootstrap) return run_core(data, config, config.variance);

  PipelineResult result = run_core(data, config, VarianceMethod::none);
  const auto boot = bootstrap_ci(
      std::function<Eigen::VectorXd(const Dataset&)>(
          [&config](const Dataset& d) { return pipeline_point_estimates(d, config); }),
      data, config.bootstrap_reps, config.seed);
  for (std::size_t j = 0; j < result.estimates.size(); ++j) {
    EstimateReport& e = result.estimates[j];
    e.variance_method = VarianceMethod::bootstrap;
    e.variance = boot[j].variance;
    e.ci_low = boot[j].ci_low;
    e.ci_high = boot[j].ci_high;
  }
  return result;
}

}  // namespace transport
