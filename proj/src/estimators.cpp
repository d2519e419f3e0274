#include "transport/estimators.hpp"

#include "transport/error.hpp"
#include "transport/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace transport {

const char* to_string(Method m) { return m == Method::ipw ? "ipw" : "aipw"; }

const char* to_string(VarianceMethod v) {
  switch (v) {
    case VarianceMethod::none: return "none";
    case VarianceMethod::sandwich: return "sandwich";
    case VarianceMethod::bootstrap: return "bootstrap";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "ipw") return Method::ipw;
  if (name == "aipw") return Method::aipw;
  throw Error(Errc::config_invalid, "unknown method '" + name + "'");
}

VarianceMethod parse_variance_method(const std::string& name) {
  if (name == "sandwich") return VarianceMethod::sandwich;
  if (name == "bootstrap") return VarianceMethod::bootstrap;
  if (name == "none") return VarianceMethod::none;
  throw Error(Errc::config_invalid, "unknown variance method '" + name + "'");
}

const char* to_string(InclusionJacobian j) {
  return j == InclusionJacobian::frozen ? "frozen" : "smooth";
}

InclusionJacobian parse_inclusion_jacobian(const std::string& name) {
  if (name == "frozen") return InclusionJacobian::frozen;
  if (name == "smooth") return InclusionJacobian::smooth;
  throw Error(Errc::config_invalid, "unknown inclusion jacobian '" + name + "'");
}

double EstimateReport::se() const { return std::sqrt(variance); }

std::string EstimateReport::method_tag() const {
  return std::string(to_string(method)) + (trimmed ? "_trimmed" : "_untrimmed");
}

ArmWeights transport_weights(const Dataset& data, const GlmFit& sampling,
                             const GlmFit& propensity) {
  const Eigen::Index n = data.rows();
  ArmWeights w{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.s[i] != 1) continue;
    const double hs = predict_row(sampling, data.x.row(i));
    const double e1 = predict_row(propensity, data.x.row(i));
    const double ea = data.a[i] == 1.0 ? e1 : 1.0 - e1;
    const double value = (1.0 - hs) / (hs * ea);
    if (!std::isfinite(value))
      throw Error(Errc::non_finite_weight,
                  "trial row " + std::to_string(i) + " has a vanishing sampling or propensity score");
    (data.a[i] == 1.0 ? w.treated : w.control)[i] = value;
  }
  return w;
}

Eigen::VectorXd inclusion_weights(const Dataset& data, const GlmFit& sampling,
                                  const GlmFit& propensity, const PartitionResult& partition) {
  const Eigen::Index n = data.rows();
  if (partition.excluded.size() != static_cast<std::size_t>(n))
    throw Error(Errc::dimension_mismatch, "partition does not belong to this dataset");
  const SmoothInclusionParams params{partition.delta_star, partition.epsilon};
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (partition.excluded[static_cast<std::size_t>(i)]) {
      k[i] = 0.0;
      continue;
    }
    const double hs = predict_row(sampling, data.x.row(i));
    const double e1 = predict_row(propensity, data.x.row(i));
    k[i] = smooth_inclusion(hs, e1, 1.0 - e1, params);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Stacked system

StackedSystem::StackedSystem(Evaluator psi, Eigen::VectorXd estimate, Eigen::VectorXd contrast,
                             std::vector<std::string> labels)
    : psi_(std::move(psi)),
      estimate_(std::move(estimate)),
      contrast_(std::move(contrast)),
      labels_(std::move(labels)),
      step_override_(static_cast<std::size_t>(estimate_.size()), 0.0) {
  if (contrast_.size() != estimate_.size())
    throw Error(Errc::dimension_mismatch, "contrast length differs from parameter length");
}

Eigen::VectorXd StackedSystem::mean_psi(const Eigen::VectorXd& xi) const {
  const Eigen::MatrixXd rows = psi_(xi);
  return rows.colwise().mean().transpose();
}

double StackedSystem::step(Eigen::Index j) const {
  const double forced = step_override_[static_cast<std::size_t>(j)];
  if (forced > 0.0) return forced;
  return std::max(1e-7, 1e-5 * std::abs(estimate_[j]));
}

void StackedSystem::set_step(Eigen::Index j, double h) {
  step_override_[static_cast<std::size_t>(j)] = h;
}

void StackedSystem::check_stationarity(double tol) const {
  const Eigen::VectorXd m = mean_psi(estimate_);
  for (Eigen::Index j = 0; j < m.size(); ++j) {
    if (!(std::abs(m[j]) <= tol)) {
      const std::string name =
          j < static_cast<Eigen::Index>(labels_.size()) ? labels_[static_cast<std::size_t>(j)]
                                                        : std::to_string(j);
      throw Error(Errc::stationarity_violation,
                  "estimating equation '" + name + "' is not solved at the plug-in estimate (mean " +
                      std::to_string(m[j]) + ")");
    }
  }
}

double sandwich_variance(const StackedSystem& system) {
  const Eigen::Index d = system.dim();
  const Eigen::VectorXd& xi = system.parameters();
  const Eigen::MatrixXd psi = system.evaluate(xi);
  const double n = static_cast<double>(psi.rows());

  Eigen::MatrixXd jac(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = system.step(j);
    Eigen::VectorXd up = xi, down = xi;
    up[j] += h;
    down[j] -= h;
    jac.col(j) = (system.mean_psi(up) - system.mean_psi(down)) / (2.0 * h);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
  if (!lu.isInvertible())
    throw Error(Errc::singular_jacobian, "estimating-equation Jacobian is singular");

  // var = eta' A^-1 B A^-T eta / n = u' B u / n with A' u = eta.
  const Eigen::VectorXd u = lu.transpose().solve(system.contrast());
  if (!u.allFinite()) throw Error(Errc::singular_jacobian, "Jacobian solve produced non-finite values");
  const Eigen::VectorXd projected = psi * u;
  const double variance = projected.squaredNorm() / n / n;
  if (!(variance >= 0.0) || !std::isfinite(variance))
    throw Error(Errc::negative_variance, "sandwich variance is negative or not finite");
  return variance;
}

namespace {

struct ModelBlock {
  Eigen::MatrixXd design;  // n x q restricted to the model's columns
  Eigen::VectorXd fixed;   // coefficients when not estimated
  bool estimated = true;
  Eigen::Index offset = -1;
  GlmFamily family = GlmFamily::bernoulli_logit;

  Eigen::Index width() const { return design.cols(); }

  Eigen::VectorXd means(const Eigen::VectorXd& xi) const {
    Eigen::VectorXd eta =
        estimated ? Eigen::VectorXd(design * xi.segment(offset, width())) : Eigen::VectorXd(design * fixed);
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = inverse_link(family, eta[i]);
    return eta;
  }
};

ModelBlock make_block(const Dataset& data, const GlmFit& fit, Eigen::Index& cursor) {
  ModelBlock b;
  b.design = select_columns(data.x, fit.columns);
  if (b.design.cols() != fit.coefficients.size())
    throw Error(Errc::dimension_mismatch, "fit does not match dataset columns");
  b.estimated = fit.estimated;
  b.family = fit.family;
  b.fixed = fit.coefficients;
  if (b.estimated) {
    b.offset = cursor;
    cursor += b.width();
  }
  return b;
}

void append_labels(std::vector<std::string>& labels, const std::string& prefix, const ModelBlock& b) {
  if (!b.estimated) return;
  for (Eigen::Index j = 0; j < b.width(); ++j) labels.push_back(prefix + "[" + std::to_string(j) + "]");
}

void require_fits_converged(const NuisanceFits& fits, Method kind) {
  auto check = [](const GlmFit& f, const char* what) {
    if (f.estimated && !f.converged)
      throw Error(Errc::stationarity_violation, std::string(what) + " model did not converge");
  };
  check(fits.sampling, "sampling");
  check(fits.propensity, "propensity");
  if (kind == Method::aipw) {
    if (!fits.outcome) throw Error(Errc::invalid_argument, "augmented estimator needs outcome models");
    check(fits.outcome->treated, "treated outcome");
    check(fits.outcome->control, "control outcome");
  }
}

}  // namespace

StackedSystem build_stacked_system(Method kind, const Dataset& data, const NuisanceFits& fits,
                                   const PartitionResult* partition, InclusionJacobian jacobian) {
  require_fits_converged(fits, kind);
  const Eigen::Index n = data.rows();
  Eigen::Index cursor = 0;
  std::vector<std::string> labels;

  const ModelBlock sampling = make_block(data, fits.sampling, cursor);
  append_labels(labels, "beta", sampling);
  const ModelBlock propensity = make_block(data, fits.propensity, cursor);
  append_labels(labels, "alpha", propensity);
  ModelBlock treated, control;
  if (kind == Method::aipw) {
    treated = make_block(data, fits.outcome->treated, cursor);
    append_labels(labels, "theta1", treated);
    control = make_block(data, fits.outcome->control, cursor);
    append_labels(labels, "theta0", control);
  }
  // A threshold at zero keeps every non-excluded row, so delta carries no
  // information and its row is dropped.
  const bool trimmed = partition != nullptr;
  const bool frozen = trimmed && jacobian == InclusionJacobian::frozen;
  const bool with_delta = trimmed && !frozen && partition->delta_star > 0.0;
  Eigen::Index delta_index = -1;
  if (with_delta) {
    delta_index = cursor++;
    labels.push_back("delta");
  }
  const Eigen::Index tail = cursor;
  const Eigen::Index tail_count = kind == Method::ipw ? 2 : 3;
  if (kind == Method::ipw) {
    labels.push_back("mu31");
    labels.push_back("mu30");
  } else {
    labels.push_back("v1");
    labels.push_back("v2");
    labels.push_back("v3");
  }
  const Eigen::Index dim = tail + tail_count;

  Eigen::VectorXd s(n), a(n), y(n), keep(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s[i] = data.s[i];
    a[i] = data.s[i] == 1 ? data.a[i] : 0.0;
    y[i] = data.s[i] == 1 ? data.y[i] : 0.0;
    keep[i] = trimmed && partition->excluded[static_cast<std::size_t>(i)] ? 0.0 : 1.0;
  }
  if (trimmed && partition->excluded.size() != static_cast<std::size_t>(n))
    throw Error(Errc::dimension_mismatch, "partition does not belong to this dataset");
  const double fixed_delta = trimmed ? partition->delta_star : 0.0;
  const double epsilon = trimmed ? partition->epsilon : 1.0;
  const double p3_star = trimmed ? partition->p3_star : 1.0;

  // Frozen: k stays at its plug-in value while the Jacobian is differenced.
  Eigen::VectorXd frozen_k;
  if (frozen) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(dim);
    if (sampling.estimated) x0.segment(sampling.offset, sampling.width()) = fits.sampling.coefficients;
    if (propensity.estimated)
      x0.segment(propensity.offset, propensity.width()) = fits.propensity.coefficients;
    const Eigen::VectorXd hs = sampling.means(x0);
    const Eigen::VectorXd e1 = propensity.means(x0);
    const SmoothInclusionParams params{fixed_delta, epsilon};
    frozen_k.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      frozen_k[i] = keep[i] == 0.0 ? 0.0 : smooth_inclusion(hs[i], e1[i], 1.0 - e1[i], params);
  }

  auto evaluator = [=](const Eigen::VectorXd& xi) -> Eigen::MatrixXd {
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(n, dim);
    const Eigen::VectorXd hs = sampling.means(xi);
    const Eigen::VectorXd e1 = propensity.means(xi);
    Eigen::VectorXd mu1, mu0;
    if (kind == Method::aipw) {
      mu1 = treated.means(xi);
      mu0 = control.means(xi);
    }
    const double delta = with_delta ? xi[delta_index] : fixed_delta;
    const SmoothInclusionParams params{delta, epsilon};
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool in_trial = s[i] == 1.0;
      if (sampling.estimated)
        psi.row(i).segment(sampling.offset, sampling.width()) = (s[i] - hs[i]) * sampling.design.row(i);
      if (propensity.estimated && in_trial)
        psi.row(i).segment(propensity.offset, propensity.width()) =
            (a[i] - e1[i]) * propensity.design.row(i);
      if (kind == Method::aipw && in_trial) {
        if (treated.estimated && a[i] == 1.0)
          psi.row(i).segment(treated.offset, treated.width()) = (y[i] - mu1[i]) * treated.design.row(i);
        if (control.estimated && a[i] == 0.0)
          psi.row(i).segment(control.offset, control.width()) = (y[i] - mu0[i]) * control.design.row(i);
      }
      double k = 1.0;
      if (frozen) k = frozen_k[i];
      else if (trimmed) k = keep[i] == 0.0 ? 0.0 : smooth_inclusion(hs[i], e1[i], 1.0 - e1[i], params);
      if (with_delta && !in_trial) psi(i, delta_index) = k - p3_star;

      double w1 = 0.0, w0 = 0.0;
      if (in_trial) {
        if (a[i] == 1.0) w1 = (1.0 - hs[i]) / (hs[i] * e1[i]);
        else w0 = (1.0 - hs[i]) / (hs[i] * (1.0 - e1[i]));
      }
      if (kind == Method::ipw) {
        if (in_trial) {
          psi(i, tail) = k * w1 * (y[i] - xi[tail]);
          psi(i, tail + 1) = k * w0 * (y[i] - xi[tail + 1]);
        }
      } else {
        if (in_trial) {
          const double r = y[i] - a[i] * mu1[i] - (1.0 - a[i]) * mu0[i];
          psi(i, tail) = k * w1 * (r - xi[tail]);
          psi(i, tail + 1) = k * w0 * (r - xi[tail + 1]);
        } else {
          psi(i, tail + 2) = k * (mu1[i] - mu0[i] - xi[tail + 2]);
        }
      }
    }
    return psi;
  };

  // Plug-in solution: component fits, solved threshold, closed-form tails.
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(dim);
  if (sampling.estimated) xi.segment(sampling.offset, sampling.width()) = fits.sampling.coefficients;
  if (propensity.estimated)
    xi.segment(propensity.offset, propensity.width()) = fits.propensity.coefficients;
  if (kind == Method::aipw) {
    if (treated.estimated) xi.segment(treated.offset, treated.width()) = fits.outcome->treated.coefficients;
    if (control.estimated) xi.segment(control.offset, control.width()) = fits.outcome->control.coefficients;
  }
  if (with_delta) xi[delta_index] = partition->delta_star;
  {
    const Eigen::VectorXd hs = sampling.means(xi);
    const Eigen::VectorXd e1 = propensity.means(xi);
    Eigen::VectorXd mu1, mu0;
    if (kind == Method::aipw) {
      mu1 = treated.means(xi);
      mu0 = control.means(xi);
    }
    const SmoothInclusionParams params{fixed_delta, epsilon};
    double num1 = 0, den1 = 0, num0 = 0, den0 = 0, num3 = 0, den3 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double k = 1.0;
      if (trimmed) k = keep[i] == 0.0 ? 0.0 : smooth_inclusion(hs[i], e1[i], 1.0 - e1[i], params);
      if (s[i] == 1.0) {
        const double ea = a[i] == 1.0 ? e1[i] : 1.0 - e1[i];
        const double w = (1.0 - hs[i]) / (hs[i] * ea);
        if (!std::isfinite(w))
          throw Error(Errc::non_finite_weight, "vanishing sampling or propensity score on a trial row");
        double value = y[i];
        if (kind == Method::aipw) value -= a[i] * mu1[i] + (1.0 - a[i]) * mu0[i];
        if (a[i] == 1.0) {
          num1 += k * w * value;
          den1 += k * w;
        } else {
          num0 += k * w * value;
          den0 += k * w;
        }
      } else if (kind == Method::aipw) {
        num3 += k * (mu1[i] - mu0[i]);
        den3 += k;
      }
    }
    if (!(den1 > 0.0) || !(den0 > 0.0) || (kind == Method::aipw && !(den3 > 0.0)))
      throw Error(Errc::zero_total_weight, "an arm has zero total (inclusion-weighted) weight");
    xi[tail] = num1 / den1;
    xi[tail + 1] = num0 / den0;
    if (kind == Method::aipw) xi[tail + 2] = num3 / den3;
  }

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(dim);
  eta[tail] = 1.0;
  eta[tail + 1] = -1.0;
  if (kind == Method::aipw) eta[tail + 2] = 1.0;
  return StackedSystem(evaluator, std::move(xi), std::move(eta), std::move(labels));
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

EstimateReport finish(const Dataset& data, const StackedSystem& system, Method method,
                      const PartitionResult* partition, const EstimateOptions& options) {
  EstimateReport r;
  r.method = method;
  r.trimmed = partition != nullptr;
  r.estimate = system.contrast_value();
  r.n1 = data.n1();
  r.n2 = data.n2();
  if (partition) {
    r.p_hat = std::array<double, 3>{partition->p1, partition->p2, partition->p3};
    r.delta_star = partition->delta_star;
  }
  r.variance_method = options.variance;
  switch (options.variance) {
    case VarianceMethod::sandwich: {
      system.check_stationarity();
      r.variance = sandwich_variance(system);
      const double half = 1.96 * std::sqrt(r.variance);
      r.ci_low = r.estimate - half;
      r.ci_high = r.estimate + half;
      break;
    }
    case VarianceMethod::none:
      r.variance = std::numeric_limits<double>::quiet_NaN();
      r.ci_low = r.ci_high = std::numeric_limits<double>::quiet_NaN();
      break;
    case VarianceMethod::bootstrap:
      throw Error(Errc::invalid_argument,
                  "bootstrap variance needs the full pipeline; use run_pipeline or bootstrap_ci");
  }
  return r;
}

}  // namespace

EstimateReport hajek_ipw(const Dataset& data, const GlmFit& sampling, const GlmFit& propensity,
                         const EstimateOptions& options) {
  const NuisanceFits fits{sampling, propensity, std::nullopt};
  const StackedSystem system = build_stacked_system(Method::ipw, data, fits, nullptr);
  return finish(data, system, Method::ipw, nullptr, options);
}

EstimateReport trimmed_ipw(const Dataset& data, const GlmFit& sampling, const GlmFit& propensity,
                           const PartitionResult& partition, const EstimateOptions& options) {
  const NuisanceFits fits{sampling, propensity, std::nullopt};
  const StackedSystem system = build_stacked_system(Method::ipw, data, fits, &partition, options.inclusion_jacobian);
  return finish(data, system, Method::ipw, &partition, options);
}

EstimateReport augmented_ipw(const Dataset& data, const NuisanceFits& fits,
                             const EstimateOptions& options) {
  const StackedSystem system = build_stacked_system(Method::aipw, data, fits, nullptr);
  return finish(data, system, Method::aipw, nullptr, options);
}

EstimateReport trimmed_aipw(const Dataset& data, const NuisanceFits& fits,
                            const PartitionResult& partition, const EstimateOptions& options) {
  const StackedSystem system = build_stacked_system(Method::aipw, data, fits, &partition, options.inclusion_jacobian);
  return finish(data, system, Method::aipw, &partition, options);
}

// ---------------------------------------------------------------------------
// Bootstrap

namespace {

double quantile_type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<BootstrapResult> bootstrap_ci(
    const std::function<Eigen::VectorXd(const Dataset&)>& estimator, const Dataset& data,
    int reps, std::uint64_t seed) {
  if (reps < 100) throw Error(Errc::invalid_argument, "bootstrap needs at least 100 replicates");
  const auto trial = data.trial_rows();
  const auto target = data.target_rows();
  if (trial.empty() || target.empty())
    throw Error(Errc::empty_group, "bootstrap needs trial and target rows");

  std::vector<std::vector<double>> draws;
  int failures = 0;
  std::vector<Eigen::Index> index(trial.size() + target.size());
  for (int b = 0; b < reps; ++b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    std::uniform_int_distribution<std::size_t> pick_trial(0, trial.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_target(0, target.size() - 1);
    for (std::size_t i = 0; i < trial.size(); ++i) index[i] = trial[pick_trial(rng)];
    for (std::size_t i = 0; i < target.size(); ++i) index[trial.size() + i] = target[pick_target(rng)];
    try {
      const Eigen::VectorXd value = estimator(data.subset(index));
      if (draws.empty()) draws.resize(static_cast<std::size_t>(value.size()));
      if (!value.allFinite()) throw Error(Errc::negative_variance, "non-finite replicate");
      for (Eigen::Index j = 0; j < value.size(); ++j)
        draws[static_cast<std::size_t>(j)].push_back(value[j]);
    } catch (const Error&) {
      ++failures;
    }
  }
  if (static_cast<double>(failures) > 0.05 * reps)
    throw Error(Errc::too_many_failures,
                std::to_string(failures) + " of " + std::to_string(reps) + " bootstrap replicates failed");

  std::vector<BootstrapResult> out;
  for (const auto& v : draws) {
    BootstrapResult r;
    r.replicates = static_cast<int>(v.size());
    r.failures = failures;
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    r.variance = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
    r.ci_low = quantile_type7(v, 0.025);
    r.ci_high = quantile_type7(v, 0.975);
    out.push_back(r);
  }
  return out;
}

BootstrapResult bootstrap_ci(const std::function<double(const Dataset&)>& estimator,
                             const Dataset& data, int reps, std::uint64_t seed) {
  auto wrapped = [&](const Dataset& d) {
    Eigen::VectorXd v(1);
    v[0] = estimator(d);
    return v;
  };
  return bootstrap_ci(std::function<Eigen::VectorXd(const Dataset&)>(wrapped), data, reps, seed)
      .front();
}

}  // namespace transport
