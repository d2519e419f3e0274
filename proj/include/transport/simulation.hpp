#pragma once

#include "transport/dataset.hpp"
#include "transport/estimators.hpp"
#include "transport/models.hpp"
#include "transport/partition.hpp"
#include "transport/random.hpp"
#include "transport/sensitivity.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace transport {

// Superpopulation with four standard-normal covariates, a rare binary
// exclusion marker E, and hard exclusion when E = 1 or X4 >= cutoff.
struct DgpConfig {
  int n_total = 100000;
  Eigen::VectorXd beta = (Eigen::VectorXd(5) << -7.523499, -2, 1, 1, 1).finished();
  Eigen::VectorXd theta0 = (Eigen::VectorXd(5) << 1, 2, 2, 1, 1).finished();
  Eigen::VectorXd theta1 = (Eigen::VectorXd(5) << 0, 1, 1, 1, 1).finished();
  double e_prob = 0.01;
  bool exclusion = true;
  double x4_cutoff = 3.0;
  double subsample_rate = 0.10;
  GlmFamily outcome_family = GlmFamily::gaussian_identity;
  double outcome_sd = 1.0;
  double treatment_prob = 0.5;
  double effect_shift = -0.5;  // coefficient of a * E

  void validate() const;
  bool excluded(double x4, bool e) const;
  // Pr(S = 1 | X, E) in the superpopulation.
  double participation(const Eigen::Ref<const Eigen::VectorXd>& x, bool e) const;
  // E[Y(a) | X, E] on the response scale; x includes the intercept.
  double outcome_mean(int a, const Eigen::Ref<const Eigen::VectorXd>& x, bool e) const;
};

// The rule (E == 1) OR (X4 >= cutoff) over a generated cohort.
ExclusionRule dgp_exclusion_rule(const DgpConfig& config);

// Hidden truth for every observed row, aligned with the Dataset rows.
struct CohortTruth {
  Eigen::VectorXd mu1;
  Eigen::VectorXd mu0;
  Eigen::VectorXd y1;
  Eigen::VectorXd y0;
  Eigen::VectorXi excluded;

  double tau(Eigen::Index i) const { return mu1[i] - mu0[i]; }
};

struct Cohort {
  Dataset data;  // covariates (1, X1..X4); auxiliary column E
  CohortTruth truth;
};

Cohort generate_cohort(const DgpConfig& config, std::uint64_t seed);

struct CovariateDraw {
  Eigen::VectorXd x;  // without intercept
  bool excluded = false;
};
using CovariateSampler = std::function<CovariateDraw(Rng&)>;

CovariateSampler dgp_covariate_sampler(const DgpConfig& config);

// Intercept b such that the mean of expit(b + slopes'x) over non-excluded
// draws (excluded draws count as zero) equals target_prob.
double calibrate_intercept(const Eigen::VectorXd& slopes, double target_prob,
                           const CovariateSampler& sampler, int mc_draws, double tol,
                           std::uint64_t seed);

// E[Y(1) - Y(0) | S = 0] by Monte Carlo over the superpopulation.
double true_tau_oracle(const DgpConfig& config, int mc_draws, std::uint64_t seed);

// Ingredients of the efficiency bound, all evaluated at covariate draws
// from the combined (trial + sampled target) distribution.
struct BoundModel {
  std::function<Eigen::VectorXd(Rng&)> sample;
  std::function<double(const Eigen::VectorXd&)> hs;
  std::function<double(const Eigen::VectorXd&)> e1;
  std::function<double(const Eigen::VectorXd&)> var1;
  std::function<double(const Eigen::VectorXd&)> var0;
  std::function<double(const Eigen::VectorXd&)> tau;
};

BoundModel dgp_bound_model(const DgpConfig& config);

struct BoundResult {
  double value = 0.0;
  bool diverging = false;  // some draw had h_s * e_a < 1e-6
};

BoundResult efficiency_bound_mc(const BoundModel& model, int mc_draws, std::uint64_t seed);

struct StudyConfig {
  DgpConfig dgp;
  std::vector<int> sizes{100000};
  std::vector<double> proportions{0.8, 0.9};
  std::vector<Method> methods{Method::ipw, Method::aipw};
  std::vector<Assumption> assumptions{Assumption::epd, Assumption::gpd};
  int replications = 1000;
  std::uint64_t master_seed = 1;
  int threads = 1;
  int truth_draws = 2000000;
  double epsilon = 1e-8;
  // Column selections for deliberately misspecified analyses.
  std::vector<Eigen::Index> sampling_columns;
  std::vector<Eigen::Index> outcome_columns;

  void validate() const;
};

struct CellOutcome {
  double proportion = 0.0;
  Method method = Method::ipw;
  Assumption assumption = Assumption::epd;
  double estimate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double tau3_hat = 0.0;
  double tau3_se = 0.0;
  double tau3_truth = 0.0;  // inclusion-weighted target mean of the true effect
};

struct ReplicationRecord {
  bool ok = false;
  std::string error;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  std::vector<CellOutcome> cells;
};

ReplicationRecord run_replication(const StudyConfig& config, int size, std::uint64_t seed);

struct StudyCell {
  int n_total = 0;
  double trial_size = 0.0;   // mean realized n1
  double target_size = 0.0;  // mean realized n2
  double proportion = 0.0;
  Method method = Method::ipw;
  Assumption assumption = Assumption::epd;
  double bias = 0.0;
  double mse = 0.0;
  double sd = 0.0;
  bool sd_defined = true;
  double coverage = 0.0;
  int replications = 0;
};

struct StudyReport {
  double true_tau = 0.0;
  int replications = 0;
  int failures = 0;
  std::vector<StudyCell> cells;

  const StudyCell* find(int n_total, double proportion, Method method, Assumption assumption) const;
};

StudyReport run_study(const StudyConfig& config);

// Header trial_size,target_size,proportion,method,assumption,bias,mse,sd,coverage.
void write_csv(std::ostream& out, const StudyReport& report);

}  // namespace transport
