#include "transport/models.hpp"

#include "transport/error.hpp"

#include <algorithm>
#include <cmath>

namespace transport {

const char* to_string(GlmFamily family) {
  return family == GlmFamily::bernoulli_logit ? "bernoulli" : "gaussian";
}

GlmFamily parse_family(const std::string& name) {
  if (name == "bernoulli" || name == "binomial" || name == "bernoulli-logit")
    return GlmFamily::bernoulli_logit;
  if (name == "gaussian" || name == "gaussian-identity")
    return GlmFamily::gaussian_identity;
  throw Error(Errc::config_invalid, "unknown outcome family '" + name + "'");
}

GlmFit GlmFit::fixed(Eigen::VectorXd coefficients, GlmFamily family,
                     std::vector<Eigen::Index> columns) {
  GlmFit fit;
  fit.coefficients = std::move(coefficients);
  fit.family = family;
  fit.converged = true;
  fit.estimated = false;
  fit.columns = std::move(columns);
  return fit;
}

double inverse_link(GlmFamily family, double eta) {
  if (family == GlmFamily::gaussian_identity) return eta;
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace {

double log_likelihood(GlmFamily family, const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  double ll = 0.0;
  if (family == GlmFamily::bernoulli_logit) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double e = eta[i];
      ll += y[i] * e - (std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))));
    }
  } else {
    ll = -0.5 * (y - eta).squaredNorm();
  }
  return ll;
}

void check_responses(GlmFamily family, const Eigen::VectorXd& y) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i]))
      throw Error(Errc::non_numeric_value, "non-finite response");
    if (family == GlmFamily::bernoulli_logit && y[i] != 0.0 && y[i] != 1.0)
      throw Error(Errc::invalid_argument, "bernoulli response outside {0,1}");
  }
}

}  // namespace

GlmFit fit_glm(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, GlmFamily family,
               const GlmOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index q = x.cols();
  if (y.size() != n)
    throw Error(Errc::dimension_mismatch, "response length does not match design rows");
  if (q == 0 || n < q)
    throw Error(Errc::dimension_mismatch, "need at least as many rows as coefficients");
  check_responses(family, y);
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x).rank() < q)
    throw Error(Errc::singular_information, "design matrix is not of full column rank");

  GlmFit fit;
  fit.family = family;
  fit.coefficients = Eigen::VectorXd::Zero(q);
  if (family == GlmFamily::bernoulli_logit) {
    // Start from the marginal log-odds, which keeps the first Newton step tame.
    const double mean = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    if (x.col(0).isOnes()) fit.coefficients[0] = std::log(mean / (1.0 - mean));
  }

  Eigen::VectorXd eta = x * fit.coefficients;
  double ll = log_likelihood(family, eta, y);
  Eigen::VectorXd mu(n), weight(n);
  for (int iter = 0;; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = inverse_link(family, eta[i]);
      weight[i] = family == GlmFamily::bernoulli_logit ? mu[i] * (1.0 - mu[i]) : 1.0;
    }
    const Eigen::VectorXd score = x.transpose() * (y - mu);
    fit.iterations = iter;
    if (score.lpNorm<Eigen::Infinity>() <= options.tolerance) {
      fit.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    const Eigen::MatrixXd info = x.transpose() * weight.asDiagonal() * x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-14 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      if (fit.coefficients.lpNorm<Eigen::Infinity>() > 0.5 * options.separation_bound)
        throw Error(Errc::separation, "information matrix degenerated while coefficients diverged");
      throw Error(Errc::singular_information, "information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(score);

    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const Eigen::VectorXd trial = fit.coefficients + t * step;
      const Eigen::VectorXd trial_eta = x * trial;
      const double trial_ll = log_likelihood(family, trial_eta, y);
      if (std::isfinite(trial_ll) && trial_ll >= ll - 1e-12 * std::abs(ll)) {
        fit.coefficients = trial;
        eta = trial_eta;
        ll = trial_ll;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  fit.log_likelihood = ll;

  if (family == GlmFamily::bernoulli_logit) {
    bool perfect = true;
    for (Eigen::Index i = 0; i < n && perfect; ++i)
      perfect = std::abs(y[i] - inverse_link(family, eta[i])) < 1e-6;
    if (perfect || fit.coefficients.lpNorm<Eigen::Infinity>() > options.separation_bound)
      throw Error(Errc::separation, "responses are (quasi-)separated by the covariates");
  }
  return fit;
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x,
                               const std::vector<Eigen::Index>& columns) {
  if (columns.empty()) return x;
  for (Eigen::Index c : columns)
    if (c < 0 || c >= x.cols())
      throw Error(Errc::dimension_mismatch, "model column index out of range");
  return x(Eigen::all, columns);
}

double predict_row(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double eta = 0.0;
  if (fit.columns.empty()) {
    if (x.size() != fit.coefficients.size())
      throw Error(Errc::dimension_mismatch, "covariate vector length does not match fit");
    eta = x.dot(fit.coefficients.transpose());
  } else {
    if (fit.columns.size() != static_cast<std::size_t>(fit.coefficients.size()))
      throw Error(Errc::dimension_mismatch, "column selection does not match fit");
    for (std::size_t j = 0; j < fit.columns.size(); ++j) {
      const Eigen::Index c = fit.columns[j];
      if (c < 0 || c >= x.size())
        throw Error(Errc::dimension_mismatch, "covariate vector too short for fit");
      eta += x[c] * fit.coefficients[static_cast<Eigen::Index>(j)];
    }
  }
  return inverse_link(fit.family, eta);
}

Eigen::VectorXd predict_mean(const GlmFit& fit, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd design = select_columns(x, fit.columns);
  if (design.cols() != fit.coefficients.size())
    throw Error(Errc::dimension_mismatch, "design width does not match fit");
  Eigen::VectorXd eta = design * fit.coefficients;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = inverse_link(fit.family, eta[i]);
  return eta;
}

Eigen::MatrixXd score_contributions(const GlmFit& fit, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y) {
  if (x.cols() != fit.coefficients.size() || y.size() != x.rows())
    throw Error(Errc::dimension_mismatch, "score contributions: shape mismatch");
  Eigen::VectorXd residual = x * fit.coefficients;
  for (Eigen::Index i = 0; i < residual.size(); ++i)
    residual[i] = y[i] - inverse_link(fit.family, residual[i]);
  return residual.asDiagonal() * x;
}

GlmFit fit_sampling_score(const Dataset& data, const std::vector<Eigen::Index>& columns) {
  if (data.n1() < 1 || data.n2() < 1)
    throw Error(Errc::empty_group, "sampling score needs trial and target rows");
  GlmFit fit = fit_glm(select_columns(data.x, columns), data.s.cast<double>(),
                       GlmFamily::bernoulli_logit);
  fit.columns = columns;
  return fit;
}

GlmFit fit_propensity_score(const Dataset& data, std::optional<double> known_probability,
                            const std::vector<Eigen::Index>& columns) {
  if (known_probability) {
    const double p = *known_probability;
    if (!(p > 0.0 && p < 1.0))
      throw Error(Errc::invalid_argument, "known treatment probability must lie in (0,1)");
    const Eigen::Index width =
        columns.empty() ? data.dim() : static_cast<Eigen::Index>(columns.size());
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(width);
    coef[0] = std::log(p / (1.0 - p));
    return GlmFit::fixed(std::move(coef), GlmFamily::bernoulli_logit, columns);
  }
  const auto trial = data.trial_rows();
  if (trial.empty()) throw Error(Errc::empty_group, "no trial rows");
  const Eigen::MatrixXd x = select_columns(data.x(trial, Eigen::all), columns);
  const Eigen::VectorXd a = data.a(trial);
  if (a.sum() == 0.0 || a.sum() == static_cast<double>(a.size()))
    throw Error(Errc::empty_group, "propensity model needs both treatment arms");
  GlmFit fit = fit_glm(x, a, GlmFamily::bernoulli_logit);
  fit.columns = columns;
  return fit;
}

OutcomeFits fit_outcome_models(const Dataset& data, GlmFamily family,
                               const std::vector<Eigen::Index>& columns) {
  return fit_outcome_models(data, family, columns, data.trial_rows());
}

OutcomeFits fit_outcome_models(const Dataset& data, GlmFamily family,
                               const std::vector<Eigen::Index>& columns,
                               const std::vector<Eigen::Index>& rows) {
  std::vector<Eigen::Index> arm1, arm0;
  for (Eigen::Index i : rows) {
    if (data.s[i] != 1) continue;
    (data.a[i] == 1.0 ? arm1 : arm0).push_back(i);
  }
  if (arm1.empty() || arm0.empty())
    throw Error(Errc::empty_group, "outcome models need both treatment arms");
  auto fit_arm = [&](const std::vector<Eigen::Index>& idx) {
    GlmFit fit = fit_glm(select_columns(data.x(idx, Eigen::all), columns), data.y(idx), family);
    fit.columns = columns;
    return fit;
  };
  return {fit_arm(arm1), fit_arm(arm0)};
}

}  // namespace transport
