#pragma once

#include "transport/dataset.hpp"
#include "transport/models.hpp"
#include "transport/partition.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace transport {

enum class Method { ipw, aipw };
enum class VarianceMethod { none, sandwich, bootstrap };

// How the trimmed systems treat k_s when the sandwich Jacobian is
// differenced. `smooth` differences k_s along with everything else and keeps
// the threshold row. With epsilon far below the finite-difference step, k_s
// is a step function at that scale and the result depends on which rows
// happen to cross the threshold inside the step. `frozen` holds k_s at its
// plug-in value and drops the threshold row.
enum class InclusionJacobian { frozen, smooth };

const char* to_string(Method m);
const char* to_string(VarianceMethod v);
const char* to_string(InclusionJacobian j);
InclusionJacobian parse_inclusion_jacobian(const std::string& name);
Method parse_method(const std::string& name);
VarianceMethod parse_variance_method(const std::string& name);

struct NuisanceFits {
  GlmFit sampling;
  GlmFit propensity;
  std::optional<OutcomeFits> outcome;
};

struct EstimateReport {
  double estimate = 0.0;
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  Method method = Method::ipw;
  bool trimmed = false;
  VarianceMethod variance_method = VarianceMethod::sandwich;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  std::optional<std::array<double, 3>> p_hat;
  std::optional<double> delta_star;

  double se() const;
  std::string method_tag() const;  // e.g. "aipw_trimmed"
};

// Per-arm weights w_a = I(S=1, A=a) (1 - h_s) / (h_s e_a) over every row.
struct ArmWeights {
  Eigen::VectorXd treated;
  Eigen::VectorXd control;
};

ArmWeights transport_weights(const Dataset& data, const GlmFit& sampling, const GlmFit& propensity);

// Smooth inclusion weight at every dataset row; rows matched by the
// exclusion rule get zero.
Eigen::VectorXd inclusion_weights(const Dataset& data, const GlmFit& sampling,
                                  const GlmFit& propensity, const PartitionResult& partition);

// Estimating-equation system sum_i Psi(row_i; xi) = 0 with a scalar contrast
// eta' xi. The evaluator returns the n x dim matrix of Psi rows.
class StackedSystem {
 public:
  using Evaluator = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  StackedSystem(Evaluator psi, Eigen::VectorXd estimate, Eigen::VectorXd contrast,
                std::vector<std::string> labels = {});

  Eigen::Index dim() const { return estimate_.size(); }
  const Eigen::VectorXd& parameters() const { return estimate_; }
  const Eigen::VectorXd& contrast() const { return contrast_; }
  const std::vector<std::string>& labels() const { return labels_; }
  double contrast_value() const { return contrast_.dot(estimate_); }

  Eigen::MatrixXd evaluate(const Eigen::VectorXd& xi) const { return psi_(xi); }
  Eigen::VectorXd mean_psi(const Eigen::VectorXd& xi) const;

  // Finite-difference step for coordinate j (default: relative 1e-5,
  // absolute floor 1e-7).
  double step(Eigen::Index j) const;
  void set_step(Eigen::Index j, double h);

  // Throws stationarity_violation if any |mean Psi| at the estimate exceeds tol.
  void check_stationarity(double tol = 1e-5) const;

 private:
  Evaluator psi_;
  Eigen::VectorXd estimate_;
  Eigen::VectorXd contrast_;
  std::vector<std::string> labels_;
  std::vector<double> step_override_;
};

// Plug-in stacked system for the transported estimators. With a partition
// the system carries the threshold row and smooth inclusion weights; without
// one it is the untrimmed estimator. Blocks for caller-fixed models are
// omitted.
StackedSystem build_stacked_system(Method kind, const Dataset& data, const NuisanceFits& fits,
                                   const PartitionResult* partition,
                                   InclusionJacobian jacobian = InclusionJacobian::smooth);

// eta' A^-1 B A^-T eta / n, with A from central differences of mean Psi.
double sandwich_variance(const StackedSystem& system);

struct EstimateOptions {
  VarianceMethod variance = VarianceMethod::sandwich;
  InclusionJacobian inclusion_jacobian = InclusionJacobian::frozen;
};

EstimateReport hajek_ipw(const Dataset& data, const GlmFit& sampling, const GlmFit& propensity,
                         const EstimateOptions& options = {});
EstimateReport trimmed_ipw(const Dataset& data, const GlmFit& sampling, const GlmFit& propensity,
                           const PartitionResult& partition, const EstimateOptions& options = {});
EstimateReport augmented_ipw(const Dataset& data, const NuisanceFits& fits,
                             const EstimateOptions& options = {});
EstimateReport trimmed_aipw(const Dataset& data, const NuisanceFits& fits,
                            const PartitionResult& partition, const EstimateOptions& options = {});

struct BootstrapResult {
  double variance = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int replicates = 0;
  int failures = 0;
};

// Resamples trial and target rows separately with replacement and re-runs
// the estimator on each replicate; percentile interval at 2.5/97.5.
BootstrapResult bootstrap_ci(const std::function<double(const Dataset&)>& estimator,
                             const Dataset& data, int reps, std::uint64_t seed);

// Vector-valued variant: one BootstrapResult per estimator output.
std::vector<BootstrapResult> bootstrap_ci(
    const std::function<Eigen::VectorXd(const Dataset&)>& estimator, const Dataset& data,
    int reps, std::uint64_t seed);

}  // namespace transport
