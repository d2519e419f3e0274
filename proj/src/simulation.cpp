#include "transport/simulation.hpp"

#include "transport/error.hpp"
#include "transport/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <thread>

namespace transport {

namespace {

double expit(double eta) { return inverse_link(GlmFamily::bernoulli_logit, eta); }

}  // namespace

void DgpConfig::validate() const {
  if (n_total < 1) throw Error(Errc::config_invalid, "n_total must be positive");
  if (beta.size() != 5 || theta0.size() != 5 || theta1.size() != 5)
    throw Error(Errc::config_invalid, "beta and theta vectors must have length 5");
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p < 1.0)) throw Error(Errc::config_invalid, std::string(what) + " must lie in [0,1)");
  };
  prob(e_prob, "e_prob");
  if (!(subsample_rate > 0.0 && subsample_rate <= 1.0))
    throw Error(Errc::config_invalid, "subsample_rate must lie in (0,1]");
  if (!(treatment_prob > 0.0 && treatment_prob < 1.0))
    throw Error(Errc::config_invalid, "treatment_prob must lie in (0,1)");
  if (!(outcome_sd > 0.0)) throw Error(Errc::config_invalid, "outcome_sd must be positive");
}

bool DgpConfig::excluded(double x4, bool e) const { return exclusion && (e || x4 >= x4_cutoff); }

double DgpConfig::participation(const Eigen::Ref<const Eigen::VectorXd>& x, bool e) const {
  if (excluded(x[4], e)) return 0.0;
  return expit(x.dot(beta));
}

double DgpConfig::outcome_mean(int a, const Eigen::Ref<const Eigen::VectorXd>& x, bool e) const {
  const double eta = x.dot(a == 1 ? theta1 : theta0) + (a == 1 && e ? effect_shift : 0.0);
  return outcome_family == GlmFamily::gaussian_identity ? eta : expit(eta);
}

ExclusionRule dgp_exclusion_rule(const DgpConfig& config) {
  ExclusionRule rule;
  if (!config.exclusion) return rule;
  rule.clauses.push_back({Predicate{"E", Comparator::eq, 1.0}});
  rule.clauses.push_back({Predicate{"X4", Comparator::ge, config.x4_cutoff}});
  return rule;
}

Cohort generate_cohort(const DgpConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  struct Unit {
    Eigen::Matrix<double, 5, 1> x;
    bool e;
    int s;
    double a, y, y1, y0, mu1, mu0;
    bool excluded;
  };
  std::vector<Unit> kept;
  kept.reserve(static_cast<std::size_t>(config.n_total * (config.subsample_rate + 0.02)) + 16);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (int i = 0; i < config.n_total; ++i) {
    Unit u;
    u.x[0] = 1.0;
    for (int j = 1; j <= 4; ++j) u.x[j] = normal(rng);
    u.e = unif(rng) < config.e_prob;
    u.excluded = config.excluded(u.x[4], u.e);
    const double p = config.participation(u.x, u.e);
    u.s = unif(rng) < p ? 1 : 0;
    if (u.s == 0 && !(unif(rng) < config.subsample_rate)) continue;

    u.mu1 = config.outcome_mean(1, u.x, u.e);
    u.mu0 = config.outcome_mean(0, u.x, u.e);
    if (config.outcome_family == GlmFamily::gaussian_identity) {
      u.y1 = u.mu1 + config.outcome_sd * normal(rng);
      u.y0 = u.mu0 + config.outcome_sd * normal(rng);
    } else {
      u.y1 = unif(rng) < u.mu1 ? 1.0 : 0.0;
      u.y0 = unif(rng) < u.mu0 ? 1.0 : 0.0;
    }
    if (u.s == 1) {
      u.a = unif(rng) < config.treatment_prob ? 1.0 : 0.0;
      u.y = u.a == 1.0 ? u.y1 : u.y0;
    } else {
      u.a = nan;
      u.y = nan;
    }
    kept.push_back(u);
  }

  const auto n = static_cast<Eigen::Index>(kept.size());
  Cohort c;
  Dataset& d = c.data;
  d.x.resize(n, 5);
  d.s.resize(n);
  d.a.resize(n);
  d.y.resize(n);
  d.aux.resize(n, 1);
  d.covariate_names = {"(intercept)", "X1", "X2", "X3", "X4"};
  d.aux_names = {"E"};
  CohortTruth& t = c.truth;
  t.mu1.resize(n);
  t.mu0.resize(n);
  t.y1.resize(n);
  t.y0.resize(n);
  t.excluded.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Unit& u = kept[static_cast<std::size_t>(i)];
    d.x.row(i) = u.x.transpose();
    d.s[i] = u.s;
    d.a[i] = u.a;
    d.y[i] = u.y;
    d.aux(i, 0) = u.e ? 1.0 : 0.0;
    t.mu1[i] = u.mu1;
    t.mu0[i] = u.mu0;
    t.y1[i] = u.y1;
    t.y0[i] = u.y0;
    t.excluded[i] = u.excluded ? 1 : 0;
  }
  return c;
}

CovariateSampler dgp_covariate_sampler(const DgpConfig& config) {
  return [config](Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    CovariateDraw d;
    d.x.resize(4);
    for (int j = 0; j < 4; ++j) d.x[j] = normal(rng);
    const bool e = unif(rng) < config.e_prob;
    d.excluded = config.excluded(d.x[3], e);
    return d;
  };
}

double calibrate_intercept(const Eigen::VectorXd& slopes, double target_prob,
                           const CovariateSampler& sampler, int mc_draws, double tol,
                           std::uint64_t seed) {
  if (!(target_prob > 0.0 && target_prob < 1.0))
    throw Error(Errc::invalid_argument, "target probability must lie in (0,1)");
  if (mc_draws < 1) throw Error(Errc::invalid_argument, "need at least one Monte Carlo draw");
  Rng rng(seed);
  std::vector<double> linear;
  linear.reserve(static_cast<std::size_t>(mc_draws));
  std::size_t excluded = 0;
  for (int i = 0; i < mc_draws; ++i) {
    const CovariateDraw d = sampler(rng);
    if (d.x.size() != slopes.size())
      throw Error(Errc::dimension_mismatch, "sampler and slopes differ in dimension");
    if (d.excluded) {
      ++excluded;
      continue;
    }
    linear.push_back(d.x.dot(slopes));
  }
  const double total = static_cast<double>(mc_draws);
  auto gap = [&](double b) {
    double sum = 0.0;
    for (double l : linear) sum += expit(b + l);
    return sum / total - target_prob;
  };
  double lo = -50.0, hi = 50.0;
  if (gap(lo) > 0.0 || gap(hi) < 0.0)
    throw Error(Errc::non_bracketing,
                "target probability is not attainable (non-excluded share " +
                    std::to_string(1.0 - static_cast<double>(excluded) / total) + ")");
  for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  if (std::abs(gap(b)) > tol)
    throw Error(Errc::non_bracketing, "calibration did not reach the requested tolerance");
  return b;
}

double true_tau_oracle(const DgpConfig& config, int mc_draws, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd x(5);
  x[0] = 1.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < mc_draws; ++i) {
    for (int j = 1; j <= 4; ++j) x[j] = normal(rng);
    const bool e = unif(rng) < config.e_prob;
    // Weighting each draw by Pr(S = 0 | X) averages over S analytically.
    const double w = 1.0 - config.participation(x, e);
    num += w * (config.outcome_mean(1, x, e) - config.outcome_mean(0, x, e));
    den += w;
  }
  return num / den;
}

BoundModel dgp_bound_model(const DgpConfig& config) {
  BoundModel m;
  // Covariates carry E as a sixth entry: (1, X1..X4, E).
  m.sample = [config](Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd x(6);
    x[0] = 1.0;
    for (;;) {
      for (int j = 1; j <= 4; ++j) x[j] = normal(rng);
      x[5] = unif(rng) < config.e_prob ? 1.0 : 0.0;
      const double p = config.participation(x.head(5), x[5] == 1.0);
      if (unif(rng) < p + config.subsample_rate * (1.0 - p)) return x;
    }
  };
  m.hs = [config](const Eigen::VectorXd& x) {
    const double p = config.participation(x.head(5), x[5] == 1.0);
    return p / (p + config.subsample_rate * (1.0 - p));
  };
  m.e1 = [config](const Eigen::VectorXd&) { return config.treatment_prob; };
  auto variance = [config](int a) {
    return [config, a](const Eigen::VectorXd& x) {
      if (config.outcome_family == GlmFamily::gaussian_identity)
        return config.outcome_sd * config.outcome_sd;
      const double mu = config.outcome_mean(a, x.head(5), x[5] == 1.0);
      return mu * (1.0 - mu);
    };
  };
  m.var1 = variance(1);
  m.var0 = variance(0);
  m.tau = [config](const Eigen::VectorXd& x) {
    return config.outcome_mean(1, x.head(5), x[5] == 1.0) -
           config.outcome_mean(0, x.head(5), x[5] == 1.0);
  };
  return m;
}

BoundResult efficiency_bound_mc(const BoundModel& model, int mc_draws, std::uint64_t seed) {
  if (mc_draws < 1) throw Error(Errc::invalid_argument, "need at least one Monte Carlo draw");
  Rng rng(seed);
  BoundResult result;
  double design = 0.0, q0 = 0.0, t1 = 0.0, t2 = 0.0;
  for (int i = 0; i < mc_draws; ++i) {
    const Eigen::VectorXd x = model.sample(rng);
    const double h = model.hs(x);
    const double e1 = model.e1(x);
    const double e0 = 1.0 - e1;
    if (h * std::min(e1, e0) < 1e-6) result.diverging = true;
    const double tau = model.tau(x);
    design += (1.0 - h) * (1.0 - h) / h * (model.var1(x) / e1 + model.var0(x) / e0);
    q0 += 1.0 - h;
    t1 += (1.0 - h) * tau;
    t2 += (1.0 - h) * tau * tau;
  }
  const double n = static_cast<double>(mc_draws);
  const double tau_bar = t1 / q0;
  const double spread = std::max(0.0, t2 - 2.0 * tau_bar * t1 + tau_bar * tau_bar * q0);
  const double q = q0 / n;
  result.value = (design / n + spread / n) / (q * q);
  return result;
}

// ---------------------------------------------------------------------------
// Replication study

void StudyConfig::validate() const {
  dgp.validate();
  if (replications < 1) throw Error(Errc::config_invalid, "replications must be at least 1");
  if (sizes.empty() || proportions.empty() || methods.empty() || assumptions.empty())
    throw Error(Errc::config_invalid, "study needs sizes, proportions, methods and assumptions");
  for (double p : proportions)
    if (!(p > 0.0 && p <= 1.0)) throw Error(Errc::config_invalid, "proportions must lie in (0,1]");
  if (threads < 1) throw Error(Errc::config_invalid, "threads must be at least 1");
}

ReplicationRecord run_replication(const StudyConfig& config, int size, std::uint64_t seed) {
  ReplicationRecord rec;
  try {
    DgpConfig dgp = config.dgp;
    dgp.n_total = size;
    const Cohort cohort = generate_cohort(dgp, seed);
    const Dataset& data = cohort.data;
    data.validate();
    rec.n1 = data.n1();
    rec.n2 = data.n2();

    PipelineConfig pc;
    pc.outcome_family = dgp.outcome_family;
    pc.rule = dgp_exclusion_rule(dgp);
    pc.epsilon = config.epsilon;
    pc.sampling_columns = config.sampling_columns;
    pc.outcome_columns = config.outcome_columns;
    const bool need_outcome =
        std::find(config.methods.begin(), config.methods.end(), Method::aipw) != config.methods.end();
    const NuisanceFits fits = fit_nuisance(data, pc, need_outcome);

    for (double p3 : config.proportions) {
      const PartitionResult part =
          partition_population(data, fits.sampling, fits.propensity, pc.rule, p3, config.epsilon);
      // Realized group effects from the hidden truth.
      std::array<double, 3> sum{0, 0, 0}, cnt{0, 0, 0};
      double k_tau = 0.0, k_sum = 0.0;
      for (std::size_t j = 0; j < part.target_index.size(); ++j) {
        const double tau = cohort.truth.tau(part.target_index[j]);
        const auto g = static_cast<std::size_t>(part.label[j]) - 1;
        sum[g] += tau;
        cnt[g] += 1.0;
        k_tau += part.inclusion[j] * tau;
        k_sum += part.inclusion[j];
      }
      auto group_mean = [&](std::size_t g) { return cnt[g] > 0 ? sum[g] / cnt[g] : 0.0; };
      const double zeta1 = group_mean(0), zeta2 = group_mean(1), tau3_group = group_mean(2);
      const double tau3_truth = k_tau / k_sum;

      for (Method m : config.methods) {
        const EstimateReport est = m == Method::ipw
                                       ? trimmed_ipw(data, fits.sampling, fits.propensity, part)
                                       : trimmed_aipw(data, fits, part);
        for (Assumption as : config.assumptions) {
          SensitivityInput in;
          in.tau3 = est.estimate;
          in.tau3_ci_low = est.ci_low;
          in.tau3_ci_high = est.ci_high;
          in.p3_star = p3;
          in.p_hat = {part.p1, 1.0 - part.p1 - p3};
          SensitivityEstimate s;
          if (as == Assumption::gpd) {
            in.k = {zeta1 / tau3_group, zeta2 / tau3_group};
            s = gpd_estimate(in);
          } else {
            in.zeta = std::array<double, 2>{zeta1, zeta2};
            in.k = {1.0, 1.0};
            s = epd_estimate(in);
          }
          CellOutcome cell;
          cell.proportion = p3;
          cell.method = m;
          cell.assumption = as;
          cell.estimate = s.tau;
          cell.ci_low = s.ci_low;
          cell.ci_high = s.ci_high;
          cell.tau3_hat = est.estimate;
          cell.tau3_se = est.se();
          cell.tau3_truth = tau3_truth;
          rec.cells.push_back(cell);
        }
      }
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.cells.clear();
  }
  return rec;
}

const StudyCell* StudyReport::find(int n_total, double proportion, Method method,
                                   Assumption assumption) const {
  for (const auto& c : cells)
    if (c.n_total == n_total && std::abs(c.proportion - proportion) < 1e-12 && c.method == method &&
        c.assumption == assumption)
      return &c;
  return nullptr;
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  StudyReport report;
  report.replications = config.replications;
  report.true_tau = true_tau_oracle(config.dgp, config.truth_draws,
                                    derive_seed(config.master_seed, 0, 0x7a75u));

  for (std::size_t si = 0; si < config.sizes.size(); ++si) {
    const int size = config.sizes[si];
    std::vector<ReplicationRecord> records(static_cast<std::size_t>(config.replications));
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int r = next++; r < config.replications; r = next++)
        records[static_cast<std::size_t>(r)] = run_replication(
            config, size, derive_seed(config.master_seed, static_cast<std::uint64_t>(r), si + 1));
    };
    const int nthreads = std::min(config.threads, config.replications);
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    int failures = 0;
    double n1_sum = 0.0, n2_sum = 0.0;
    const ReplicationRecord* shape = nullptr;
    for (const auto& rec : records) {
      if (!rec.ok) {
        ++failures;
        continue;
      }
      n1_sum += static_cast<double>(rec.n1);
      n2_sum += static_cast<double>(rec.n2);
      if (!shape) shape = &rec;
    }
    report.failures += failures;
    if (!shape || static_cast<double>(failures) > 0.01 * config.replications) {
      std::string first;
      for (const auto& rec : records)
        if (!rec.ok) {
          first = rec.error;
          break;
        }
      throw Error(Errc::too_many_failures, std::to_string(failures) + " of " +
                                               std::to_string(config.replications) +
                                               " replications failed; first: " + first);
    }
    const int ok = config.replications - failures;
    for (std::size_t c = 0; c < shape->cells.size(); ++c) {
      StudyCell cell;
      cell.n_total = size;
      cell.trial_size = n1_sum / ok;
      cell.target_size = n2_sum / ok;
      cell.proportion = shape->cells[c].proportion;
      cell.method = shape->cells[c].method;
      cell.assumption = shape->cells[c].assumption;
      cell.replications = ok;
      double sum = 0.0, sq = 0.0, covered = 0.0;
      for (const auto& rec : records) {
        if (!rec.ok) continue;
        const CellOutcome& o = rec.cells[c];
        const double err = o.estimate - report.true_tau;
        sum += o.estimate;
        sq += err * err;
        if (o.ci_low <= report.true_tau && report.true_tau <= o.ci_high) covered += 1.0;
      }
      const double mean = sum / ok;
      cell.bias = mean - report.true_tau;
      cell.mse = sq / ok;
      cell.coverage = covered / ok;
      if (ok > 1) {
        double ss = 0.0;
        for (const auto& rec : records)
          if (rec.ok) ss += (rec.cells[c].estimate - mean) * (rec.cells[c].estimate - mean);
        cell.sd = std::sqrt(ss / (ok - 1));
      } else {
        cell.sd = std::numeric_limits<double>::quiet_NaN();
        cell.sd_defined = false;
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

void write_csv(std::ostream& out, const StudyReport& report) {
  out << "trial_size,target_size,proportion,method,assumption,bias,mse,sd,coverage\n";
  for (const auto& c : report.cells) {
    out << std::llround(c.trial_size) << ',' << std::llround(c.target_size) << ','
        << std::setprecision(3) << c.proportion << ',' << (c.method == Method::ipw ? "IPW" : "AIPW")
        << ',' << to_string(c.assumption) << ',' << std::fixed << std::setprecision(6) << c.bias
        << ',' << c.mse << ',';
    if (c.sd_defined) out << c.sd;
    else out << "NA";
    out << ',' << c.coverage << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace transport
