#include "transport/partition.hpp"

#include "transport/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace transport {

Comparator parse_comparator(const std::string& op) {
  if (op == "==" || op == "=") return Comparator::eq;
  if (op == "!=") return Comparator::ne;
  if (op == ">=") return Comparator::ge;
  if (op == "<=") return Comparator::le;
  if (op == ">") return Comparator::gt;
  if (op == "<") return Comparator::lt;
  if (op == "in") return Comparator::in_set;
  throw Error(Errc::incompatible_comparator, "unknown comparator '" + op + "'");
}

const char* to_string(Comparator op) {
  switch (op) {
    case Comparator::eq: return "==";
    case Comparator::ne: return "!=";
    case Comparator::ge: return ">=";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::lt: return "<";
    case Comparator::in_set: return "in";
  }
  return "?";
}

namespace {

bool holds(const Predicate& p, double v) {
  if (p.op == Comparator::in_set) {
    const auto& set = std::get<std::vector<double>>(p.value);
    return std::find(set.begin(), set.end(), v) != set.end();
  }
  const double c = std::get<double>(p.value);
  switch (p.op) {
    case Comparator::eq: return v == c;
    case Comparator::ne: return v != c;
    case Comparator::ge: return v >= c;
    case Comparator::le: return v <= c;
    case Comparator::gt: return v > c;
    case Comparator::lt: return v < c;
    case Comparator::in_set: break;
  }
  return false;
}

}  // namespace

std::vector<bool> evaluate_rule(const Dataset& data, const ExclusionRule& rule) {
  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<bool> mask(n, false);
  for (const auto& clause : rule.clauses) {
    std::vector<bool> hit(n, true);
    for (const Predicate& p : clause) {
      const bool wants_set = p.op == Comparator::in_set;
      if (wants_set != std::holds_alternative<std::vector<double>>(p.value))
        throw Error(Errc::incompatible_comparator,
                    std::string("comparator '") + to_string(p.op) + "' on variable '" +
                        p.variable + "' has the wrong value kind");
      const auto column = data.column(p.variable);
      if (!column)
        throw Error(Errc::invalid_covariate, "exclusion rule references unknown variable '" +
                                                 p.variable + "'");
      for (std::size_t i = 0; i < n; ++i)
        if (hit[i]) hit[i] = holds(p, (*column)[static_cast<Eigen::Index>(i)]);
    }
    if (clause.empty()) continue;
    for (std::size_t i = 0; i < n; ++i) mask[i] = mask[i] || hit[i];
  }
  return mask;
}

std::vector<bool> apply_exclusion_rules(const Dataset& data, const ExclusionRule& rule) {
  const std::vector<bool> all = evaluate_rule(data, rule);
  std::vector<bool> out;
  out.reserve(static_cast<std::size_t>(data.n2()));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    if (data.s[i] == 0) out.push_back(all[static_cast<std::size_t>(i)]);
  return out;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Phi((u - delta) / epsilon), short-circuiting the far tails.
double shifted_cdf(double u, double delta, double epsilon) {
  const double z = (u - delta) / epsilon;
  if (z > 40.0) return 1.0;
  if (z < -40.0) return 0.0;
  return normal_cdf(z);
}

}  // namespace

double smooth_inclusion(double hs, double e1, double e0, const SmoothInclusionParams& params) {
  // A zero threshold trims nothing, even rows whose products sit within
  // epsilon of zero.
  if (params.delta <= 0.0) return 1.0;
  const double first = shifted_cdf(hs * e1, params.delta, params.epsilon);
  if (first == 0.0) return 0.0;
  return first * shifted_cdf(hs * e0, params.delta, params.epsilon);
}

bool hard_inclusion(double hs, double e1, double e0, double delta) {
  return hs * e1 >= delta && hs * e0 >= delta;
}

double mean_inclusion(const std::vector<ScoreTriple>& scores, const std::vector<bool>& r1_mask,
                      double delta, double epsilon) {
  const SmoothInclusionParams params{delta, epsilon};
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (!r1_mask[i]) total += smooth_inclusion(scores[i].hs, scores[i].e1, scores[i].e0, params);
  return total / static_cast<double>(scores.size());
}

double solve_threshold(const std::vector<ScoreTriple>& scores, double p3_star, double epsilon,
                       const std::vector<bool>& r1_mask, const ThresholdOptions& options) {
  if (scores.empty()) throw Error(Errc::invalid_argument, "no target scores");
  if (r1_mask.size() != scores.size())
    throw Error(Errc::dimension_mismatch, "exclusion mask does not match scores");
  if (!(epsilon > 0.0)) throw Error(Errc::invalid_argument, "epsilon must be positive");
  if (!(p3_star > 0.0 && p3_star <= 1.0))
    throw Error(Errc::invalid_argument, "p3_star must lie in (0, 1]");

  const auto n = static_cast<double>(scores.size());
  double kept = 0.0;
  double lowest = std::numeric_limits<double>::infinity();
  double highest = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (r1_mask[i]) continue;
    kept += 1.0;
    const double m = std::min(scores[i].hs * scores[i].e1, scores[i].hs * scores[i].e0);
    lowest = std::min(lowest, m);
    highest = std::max(highest, m);
  }
  const double attainable = kept / n;
  if (p3_star > attainable + 1e-12)
    throw Error(Errc::unattainable_proportion,
                "requested well-represented share " + std::to_string(p3_star) +
                    " exceeds the non-excluded share " + std::to_string(attainable));

  auto f = [&](double delta) { return mean_inclusion(scores, r1_mask, delta, epsilon); };
  double lo = 0.0;
  const double f_lo = f(lo);
  if (f_lo <= p3_star + options.mean_tolerance) return lo;
  if (highest == lowest)
    throw Error(Errc::degenerate_scores,
                "all score products are equal; the requested share cannot be isolated");

  double hi = highest + 40.0 * epsilon;
  double f_hi = f(hi);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const bool narrow = hi - lo <= options.interval_floor;
    if (narrow && p3_star - f_hi <= options.mean_tolerance) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f_mid = f(mid);
    if (f_mid <= p3_star) {
      hi = mid;
      f_hi = f_mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::size_t PartitionResult::count(Group g) const {
  return static_cast<std::size_t>(std::count(label.begin(), label.end(), g));
}

std::vector<ScoreTriple> score_triples(const Dataset& data, const GlmFit& sampling,
                                       const GlmFit& propensity,
                                       const std::vector<Eigen::Index>& rows) {
  std::vector<ScoreTriple> out;
  out.reserve(rows.size());
  for (Eigen::Index i : rows) {
    const double hs = predict_row(sampling, data.x.row(i));
    const double e1 = predict_row(propensity, data.x.row(i));
    out.push_back({hs, e1, 1.0 - e1});
  }
  return out;
}

PartitionResult partition_population(const Dataset& data, const GlmFit& sampling,
                                     const GlmFit& propensity, const ExclusionRule& rule,
                                     double p3_star, double epsilon) {
  PartitionResult result;
  result.target_index = data.target_rows();
  if (result.target_index.empty()) throw Error(Errc::empty_group, "no target rows");
  result.excluded = evaluate_rule(data, rule);
  std::vector<bool> r1;
  r1.reserve(result.target_index.size());
  for (Eigen::Index i : result.target_index) r1.push_back(result.excluded[static_cast<std::size_t>(i)]);
  const auto scores = score_triples(data, sampling, propensity, result.target_index);

  result.epsilon = epsilon;
  result.p3_star = p3_star;
  result.delta_star = solve_threshold(scores, p3_star, epsilon, r1);

  const SmoothInclusionParams params{result.delta_star, epsilon};
  const std::size_t m = scores.size();
  result.label.resize(m);
  result.inclusion.resize(m);
  double r1_count = 0.0;
  double k_total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const ScoreTriple& sc = scores[i];
    if (r1[i]) {
      result.label[i] = Group::unrepresented;
      result.inclusion[i] = 0.0;
      r1_count += 1.0;
      continue;
    }
    result.inclusion[i] = smooth_inclusion(sc.hs, sc.e1, sc.e0, params);
    k_total += result.inclusion[i];
    result.label[i] = hard_inclusion(sc.hs, sc.e1, sc.e0, result.delta_star)
                          ? Group::well_represented
                          : Group::underrepresented;
  }
  result.p1 = r1_count / static_cast<double>(m);
  result.p3 = k_total / static_cast<double>(m);
  result.p2 = 1.0 - result.p1 - result.p3;
  return result;
}

}  // namespace transport
