#pragma once

#include "transport/dataset.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace transport {

enum class GlmFamily { bernoulli_logit, gaussian_identity };

const char* to_string(GlmFamily family);
GlmFamily parse_family(const std::string& name);

// A fitted (or caller-fixed) generalized linear model. `columns` selects the
// covariate columns of a Dataset that the coefficients apply to; empty means
// all of them. `estimated` is false for models whose coefficients were
// supplied rather than solved for; such models carry no score equations.
struct GlmFit {
  Eigen::VectorXd coefficients;
  GlmFamily family = GlmFamily::bernoulli_logit;
  bool converged = false;
  int iterations = 0;
  double log_likelihood = 0.0;
  bool estimated = true;
  std::vector<Eigen::Index> columns;

  static GlmFit fixed(Eigen::VectorXd coefficients, GlmFamily family,
                      std::vector<Eigen::Index> columns = {});
};

struct GlmOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;       // on the score max-norm
  double separation_bound = 30;  // |coefficient| beyond this is divergence
};

double inverse_link(GlmFamily family, double eta);

GlmFit fit_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
               const GlmOptions& options = {});

// Inverse link of x' * coefficients. `x` is a full covariate row; the fit's
// column selection is applied here.
double predict_row(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x);
Eigen::VectorXd predict_mean(const GlmFit& fit, const Eigen::MatrixXd& x);

// Per-observation score rows (y_i - mu_i) x_i; x must already be restricted
// to the fit's columns.
Eigen::MatrixXd score_contributions(const GlmFit& fit, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y);

// Applies a column selection (empty = all columns).
Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x,
                               const std::vector<Eigen::Index>& columns);

GlmFit fit_sampling_score(const Dataset& data, const std::vector<Eigen::Index>& columns = {});

GlmFit fit_propensity_score(const Dataset& data,
                            std::optional<double> known_probability = std::nullopt,
                            const std::vector<Eigen::Index>& columns = {});

struct OutcomeFits {
  GlmFit treated;  // theta_1
  GlmFit control;  // theta_0
};

OutcomeFits fit_outcome_models(const Dataset& data, GlmFamily family,
                               const std::vector<Eigen::Index>& columns = {});

// Fits arm-specific outcome models on the trial rows in `rows` only.
OutcomeFits fit_outcome_models(const Dataset& data, GlmFamily family,
                               const std::vector<Eigen::Index>& columns,
                               const std::vector<Eigen::Index>& rows);

}  // namespace transport
