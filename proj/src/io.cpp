#include "transport/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace transport {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& field) {
  return field.empty() || field == "NA" || field == "NaN" || field == "nan";
}

std::optional<double> parse_number(const std::string& field) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Re-raises library errors with the pipeline stage prefixed.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.what());
  }
}

// nlohmann throws its own types on shape mismatches; those are config errors.
template <class F>
auto config_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_invalid, std::string("malformed configuration: ") + e.what());
  }
}

void check_schema(const Json& j) {
  if (!j.is_object()) throw Error(Errc::config_invalid, "configuration must be a JSON object");
  if (!j.contains("schema_version"))
    throw Error(Errc::config_invalid, "configuration lacks schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw Error(Errc::config_invalid, "unsupported schema_version");
}

std::uint64_t require_seed(const Json& j) {
  if (!j.contains("seed") || j.at("seed").is_null())
    throw Error(Errc::config_invalid, "a seed is required");
  return j.at("seed").get<std::uint64_t>();
}

std::vector<double> finite_grid(const Json& j, const char* name) {
  auto v = j.get<std::vector<double>>();
  if (v.empty()) throw Error(Errc::config_invalid, std::string(name) + " must be nonempty");
  for (double x : v)
    if (!std::isfinite(x)) throw Error(Errc::config_invalid, std::string(name) + " must be finite");
  return v;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::vector<double> with_unit(std::vector<double> grid) {
  if (std::find(grid.begin(), grid.end(), 1.0) == grid.end()) {
    grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
  }
  return grid;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset ingestion

Dataset read_dataset(std::istream& in, const ColumnRoles& roles) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::missing_column, "input has no header row");
  const auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t j = 0; j < header.size(); ++j) position[trim(header[j])] = j;
  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw Error(Errc::missing_column, "column '" + name + "' not found");
    return it->second;
  };
  if (roles.covariate_columns.empty())
    throw Error(Errc::config_invalid, "at least one covariate column is required");
  const std::size_t s_col = locate(roles.s_column);
  const std::size_t a_col = locate(roles.a_column);
  const std::size_t y_col = locate(roles.y_column);
  std::vector<std::size_t> cov_cols, aux_cols;
  for (const auto& c : roles.covariate_columns) cov_cols.push_back(locate(c));
  for (const auto& c : roles.aux_columns) aux_cols.push_back(locate(c));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<int> s;
  std::vector<double> a, y, x, aux;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "line " + std::to_string(line_no);
    if (f.size() != header.size())
      throw Error(Errc::dimension_mismatch, where + ": expected " + std::to_string(header.size()) +
                                                " fields, found " + std::to_string(f.size()));
    const auto sv = parse_number(trim(f[s_col]));
    if (!sv || (*sv != 0.0 && *sv != 1.0))
      throw Error(Errc::role_misassignment, where + ": participation flag must be 0 or 1");
    const int si = static_cast<int>(*sv);
    double av = nan, yv = nan;
    const std::string af = trim(f[a_col]), yf = trim(f[y_col]);
    if (si == 0) {
      if (!is_missing(af) || !is_missing(yf))
        throw Error(Errc::role_misassignment,
                    where + ": treatment or outcome present on a target row");
    } else {
      const auto ap = parse_number(af), yp = parse_number(yf);
      if (!ap || !yp)
        throw Error(Errc::role_misassignment, where + ": trial row needs numeric treatment and outcome");
      av = *ap;
      yv = *yp;
    }
    s.push_back(si);
    a.push_back(av);
    y.push_back(yv);
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      const auto v = parse_number(trim(f[cov_cols[j]]));
      if (!v)
        throw Error(Errc::non_numeric_value,
                    where + ": covariate '" + roles.covariate_columns[j] + "' is not numeric");
      x.push_back(*v);
    }
    for (std::size_t j = 0; j < aux_cols.size(); ++j) {
      const auto v = parse_number(trim(f[aux_cols[j]]));
      if (!v)
        throw Error(Errc::non_numeric_value,
                    where + ": column '" + roles.aux_columns[j] + "' is not numeric");
      aux.push_back(*v);
    }
  }

  const auto n = static_cast<Eigen::Index>(s.size());
  const auto p = static_cast<Eigen::Index>(cov_cols.size());
  const auto q = static_cast<Eigen::Index>(aux_cols.size());
  Dataset d;
  d.x.resize(n, p + 1);
  d.x.col(0).setOnes();
  d.aux.resize(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.x(i, j + 1) = x[static_cast<std::size_t>(i * p + j)];
    for (Eigen::Index j = 0; j < q; ++j) d.aux(i, j) = aux[static_cast<std::size_t>(i * q + j)];
  }
  d.s = Eigen::Map<Eigen::VectorXi>(s.data(), n);
  d.a = Eigen::Map<Eigen::VectorXd>(a.data(), n);
  d.y = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  d.covariate_names.push_back("(intercept)");
  for (const auto& c : roles.covariate_columns) d.covariate_names.push_back(c);
  d.aux_names = roles.aux_columns;
  d.validate(false);
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_column, "cannot open " + path.string());
  return read_dataset(in, roles);
}

// ---------------------------------------------------------------------------
// Configuration

void AnalysisConfig::validate() const {
  if (p3_star && !(*p3_star > 0.0 && *p3_star <= 1.0))
    throw Error(Errc::config_invalid, "p3_star must lie in (0,1]");
  if (!(epsilon > 0.0)) throw Error(Errc::config_invalid, "epsilon must be positive");
  if (methods.empty()) throw Error(Errc::config_invalid, "at least one method is required");
  if (variance == VarianceMethod::bootstrap && bootstrap_reps < 100)
    throw Error(Errc::config_invalid, "bootstrap needs at least 100 replicates");
  if (histogram_bins < 1) throw Error(Errc::config_invalid, "histogram_bins must be positive");
  if (sensitivity && !p3_star)
    throw Error(Errc::config_invalid, "sensitivity analysis needs p3_star");
}

PipelineConfig AnalysisConfig::pipeline() const {
  PipelineConfig pc;
  pc.outcome_family = outcome_family;
  pc.rule = rule;
  pc.p3_star = p3_star;
  pc.epsilon = epsilon;
  pc.known_propensity = known_propensity;
  pc.methods = methods;
  pc.variance = variance;
  pc.inclusion_jacobian = inclusion_jacobian;
  pc.bootstrap_reps = bootstrap_reps;
  pc.seed = seed;
  return pc;
}

ExclusionRule parse_exclusion_rule(const Json& j) {
  return config_guard([&] {
    ExclusionRule rule;
    if (j.is_null()) return rule;
    for (const auto& clause : j) {
      std::vector<Predicate> preds;
      for (const auto& p : clause) {
        Predicate pred;
        pred.variable = p.at("variable").get<std::string>();
        pred.op = parse_comparator(p.at("op").get<std::string>());
        const Json& v = p.at("value");
        if (pred.op == Comparator::in_set) {
          if (!v.is_array())
            throw Error(Errc::incompatible_comparator, "'in' needs a list of values");
          pred.value = v.get<std::vector<double>>();
        } else {
          if (!v.is_number())
            throw Error(Errc::incompatible_comparator,
                        "comparator " + std::string(to_string(pred.op)) + " needs a number");
          pred.value = v.get<double>();
        }
        preds.push_back(std::move(pred));
      }
      if (preds.empty()) throw Error(Errc::config_invalid, "exclusion clause is empty");
      rule.clauses.push_back(std::move(preds));
    }
    return rule;
  });
}

AnalysisConfig parse_analysis_config(const Json& j, const std::filesystem::path& base_dir) {
  return config_guard([&] {
    check_schema(j);
    AnalysisConfig c;
    c.seed = require_seed(j);
    std::filesystem::path input = j.at("input").get<std::string>();
    c.input = input.is_relative() && !base_dir.empty() ? base_dir / input : input;
    const Json& cols = j.at("columns");
    c.roles.s_column = cols.value("s", c.roles.s_column);
    c.roles.a_column = cols.value("a", c.roles.a_column);
    c.roles.y_column = cols.value("y", c.roles.y_column);
    c.roles.covariate_columns = cols.at("covariates").get<std::vector<std::string>>();
    c.roles.aux_columns = cols.value("auxiliary", std::vector<std::string>{});
    c.outcome_family = parse_family(j.value("outcome_family", std::string("gaussian")));
    if (j.contains("p3_star") && !j.at("p3_star").is_null()) c.p3_star = j.at("p3_star").get<double>();
    c.epsilon = j.value("epsilon", c.epsilon);
    if (j.contains("exclusion_rules")) c.rule = parse_exclusion_rule(j.at("exclusion_rules"));
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    c.variance = parse_variance_method(j.value("variance", std::string("sandwich")));
    c.bootstrap_reps = j.value("bootstrap_reps", c.bootstrap_reps);
    c.inclusion_jacobian =
        parse_inclusion_jacobian(j.value("inclusion_jacobian", std::string(to_string(c.inclusion_jacobian))));
    if (j.contains("known_propensity") && !j.at("known_propensity").is_null())
      c.known_propensity = j.at("known_propensity").get<double>();
    c.histogram_bins = j.value("histogram_bins", c.histogram_bins);
    if (j.contains("sensitivity") && !j.at("sensitivity").is_null()) {
      const Json& s = j.at("sensitivity");
      SensitivityConfig sc;
      sc.assumption = parse_assumption(s.value("assumption", std::string("GPD")));
      sc.method = parse_method(s.value("method", std::string("aipw")));
      if (s.contains("k1_grid")) sc.k1_grid = finite_grid(s.at("k1_grid"), "k1_grid");
      if (s.contains("k2_grid")) sc.k2_grid = finite_grid(s.at("k2_grid"), "k2_grid");
      if (s.contains("zeta")) {
        const auto z = s.at("zeta").get<std::vector<double>>();
        if (z.size() != 2) throw Error(Errc::config_invalid, "zeta needs two values");
        sc.zeta = std::array<double, 2>{z[0], z[1]};
      }
      if (s.contains("surrogate_rows")) {
        const Json& f = s.at("surrogate_rows");
        if (f.contains("R1")) sc.surrogate_rows[0] = parse_exclusion_rule(f.at("R1"));
        if (f.contains("R2")) sc.surrogate_rows[1] = parse_exclusion_rule(f.at("R2"));
      }
      c.sensitivity = sc;
    }
    c.validate();
    return c;
  });
}

StudyConfig parse_study_config(const Json& j) {
  return config_guard([&] {
    check_schema(j);
    StudyConfig c;
    c.master_seed = require_seed(j);
    c.replications = j.value("replications", c.replications);
    if (j.contains("sizes")) c.sizes = j.at("sizes").get<std::vector<int>>();
    if (j.contains("proportions")) c.proportions = j.at("proportions").get<std::vector<double>>();
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("assumptions")) {
      c.assumptions.clear();
      for (const auto& a : j.at("assumptions"))
        c.assumptions.push_back(parse_assumption(a.get<std::string>()));
    }
    c.truth_draws = j.value("truth_draws", c.truth_draws);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.threads = j.value("threads", c.threads);
    c.dgp.outcome_family = parse_family(j.value("outcome_family", std::string("gaussian")));
    if (j.contains("dgp")) {
      const Json& d = j.at("dgp");
      if (d.contains("beta")) c.dgp.beta = to_vector(d.at("beta").get<std::vector<double>>());
      if (d.contains("theta0")) c.dgp.theta0 = to_vector(d.at("theta0").get<std::vector<double>>());
      if (d.contains("theta1")) c.dgp.theta1 = to_vector(d.at("theta1").get<std::vector<double>>());
      c.dgp.e_prob = d.value("e_prob", c.dgp.e_prob);
      c.dgp.exclusion = d.value("exclusion", c.dgp.exclusion);
      c.dgp.x4_cutoff = d.value("x4_cutoff", c.dgp.x4_cutoff);
      c.dgp.subsample_rate = d.value("subsample_rate", c.dgp.subsample_rate);
      c.dgp.outcome_sd = d.value("outcome_sd", c.dgp.outcome_sd);
      c.dgp.treatment_prob = d.value("treatment_prob", c.dgp.treatment_prob);
      c.dgp.effect_shift = d.value("effect_shift", c.dgp.effect_shift);
    }
    c.validate();
    return c;
  });
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_invalid, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_invalid, path.string() + ": " + e.what());
  }
}

AnalysisConfig load_analysis_config(const std::filesystem::path& path) {
  return parse_analysis_config(read_json(path), path.parent_path());
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  return parse_study_config(read_json(path));
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const GlmFit& fit, const std::vector<std::string>& names) {
  Json coef = Json::object();
  for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
    const auto col = fit.columns.empty() ? j : fit.columns[static_cast<std::size_t>(j)];
    const std::string name = static_cast<std::size_t>(col) < names.size()
                                 ? names[static_cast<std::size_t>(col)]
                                 : "x" + std::to_string(col);
    coef[name] = fit.coefficients[j];
  }
  return Json{{"family", to_string(fit.family)},
              {"estimated", fit.estimated},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"log_likelihood", number_or_null(fit.log_likelihood)},
              {"coefficients", coef}};
}

Json to_json(const EstimateReport& e) {
  Json j{{"method", to_string(e.method)},
         {"trimmed", e.trimmed},
         {"tag", e.method_tag()},
         {"estimate", e.estimate},
         {"se", number_or_null(e.se())},
         {"variance", number_or_null(e.variance)},
         {"ci_low", number_or_null(e.ci_low)},
         {"ci_high", number_or_null(e.ci_high)},
         {"variance_method", to_string(e.variance_method)},
         {"n1", e.n1},
         {"n2", e.n2}};
  return j;
}

Json to_json(const PartitionResult& p) {
  return Json{{"delta_star", p.delta_star},
              {"epsilon", p.epsilon},
              {"p3_star", p.p3_star},
              {"proportions", {{"p1", p.p1}, {"p2", p.p2}, {"p3", p.p3}}},
              {"counts",
               {{"unrepresented", p.count(Group::unrepresented)},
                {"underrepresented", p.count(Group::underrepresented)},
                {"well_represented", p.count(Group::well_represented)}}}};
}

namespace {

Json score_histogram(const Dataset& data, const GlmFit& sampling, int bins) {
  const Eigen::VectorXd h = predict_mean(sampling, data.x);
  const double lo = h.minCoeff(), hi = h.maxCoeff();
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<long> trial(static_cast<std::size_t>(bins), 0), target(static_cast<std::size_t>(bins), 0);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    auto b = static_cast<int>((h[i] - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    (data.s[i] == 1 ? trial : target)[static_cast<std::size_t>(b)] += 1;
  }
  std::vector<double> edges;
  for (int b = 0; b <= bins; ++b) edges.push_back(lo + b * width);
  return Json{{"edges", edges}, {"trial", trial}, {"target", target}};
}

std::vector<Eigen::Index> group_rows(const PartitionResult& p, Group g) {
  std::vector<Eigen::Index> rows;
  for (std::size_t j = 0; j < p.target_index.size(); ++j)
    if (p.label[j] == g) rows.push_back(p.target_index[j]);
  return rows;
}

}  // namespace

Json analyze(const AnalysisConfig& config, const Dataset& data) {
  config.validate();
  staged("data", [&] { data.validate(); });
  const PipelineConfig pc = config.pipeline();

  // Fitting, partitioning and estimation run through the library pipeline so
  // the CLI cannot drift from it; a failing run is replayed stage by stage to
  // attach the failing stage to the error.
  PipelineResult result;
  try {
    result = run_pipeline(data, pc);
  } catch (const Error&) {
    const bool aipw = std::find(pc.methods.begin(), pc.methods.end(), Method::aipw) != pc.methods.end();
    const NuisanceFits fits = staged("fit", [&] { return fit_nuisance(data, pc, aipw); });
    if (pc.p3_star)
      staged("partition", [&] {
        return partition_population(data, fits.sampling, fits.propensity, pc.rule, *pc.p3_star,
                                    pc.epsilon);
      });
    staged("estimate", [&] { return run_pipeline(data, pc); });
    throw;
  }

  Json report;
  report["schema_version"] = kSchemaVersion;
  report["n1"] = data.n1();
  report["n2"] = data.n2();
  report["outcome_family"] = to_string(config.outcome_family);
  Json fits{{"sampling", to_json(result.fits.sampling, data.covariate_names)},
            {"propensity", to_json(result.fits.propensity, data.covariate_names)}};
  if (result.fits.outcome) {
    fits["outcome_treated"] = to_json(result.fits.outcome->treated, data.covariate_names);
    fits["outcome_control"] = to_json(result.fits.outcome->control, data.covariate_names);
  }
  report["fits"] = fits;
  if (result.partition) {
    report["partition"] = to_json(*result.partition);
    // Group effects extrapolated from the trial outcome models, as used by
    // the EPD sensitivity analysis.
    const OutcomeFits outcome = result.fits.outcome
                                    ? *result.fits.outcome
                                    : staged("fit", [&] {
                                        return fit_outcome_models(data, config.outcome_family);
                                      });
    Json zeta = Json::object();
    const std::pair<const char*, Group> groups[] = {{"R1", Group::unrepresented},
                                                    {"R2", Group::underrepresented}};
    for (std::size_t gi = 0; gi < 2; ++gi) {
      const auto& [name, g] = groups[gi];
      const auto rows = group_rows(*result.partition, g);
      if (rows.empty()) {
        zeta[name] = nullptr;
        continue;
      }
      const ExclusionRule* filter =
          config.sensitivity && !config.sensitivity->surrogate_rows[gi].empty()
              ? &config.sensitivity->surrogate_rows[gi]
              : nullptr;
      if (!filter) {
        zeta[name] = extrapolate_group_ate(outcome, data, rows);
        continue;
      }
      const auto mask = evaluate_rule(data, *filter);
      std::vector<Eigen::Index> fit_rows;
      for (Eigen::Index i : data.trial_rows())
        if (mask[static_cast<std::size_t>(i)]) fit_rows.push_back(i);
      const OutcomeFits local = staged("fit", [&] {
        return fit_outcome_models(data, config.outcome_family, {}, fit_rows);
      });
      zeta[name] = extrapolate_group_ate(local, data, rows);
    }
    report["zeta"] = zeta;
  } else {
    report["partition"] = nullptr;
  }
  Json estimates = Json::array();
  for (const auto& e : result.estimates) estimates.push_back(to_json(e));
  report["estimates"] = estimates;
  report["sampling_score_histogram"] =
      score_histogram(data, result.fits.sampling, config.histogram_bins);
  return report;
}

Json cmd_analyze(const AnalysisConfig& config) {
  const Dataset data = staged("data", [&] { return load_dataset(config.input, config.roles); });
  return analyze(config, data);
}

SensitivityGrid cmd_sensitivity(const AnalysisConfig& config, const Json& report) {
  if (!config.sensitivity) throw Error(Errc::config_invalid, "configuration has no sensitivity block");
  const SensitivityConfig& sc = *config.sensitivity;
  return config_guard([&] {
    const Json* found = nullptr;
    if (report.contains("estimates"))
      for (const auto& e : report.at("estimates"))
        if (e.at("method").get<std::string>() == to_string(sc.method) && e.at("trimmed").get<bool>())
          found = &e;
    if (!found || !report.contains("partition") || report.at("partition").is_null())
      throw Error(Errc::missing_estimate,
                  std::string("report has no trimmed ") + to_string(sc.method) + " estimate");
    const Json& e = *found;
    if (e.at("ci_low").is_null() || e.at("ci_high").is_null())
      throw Error(Errc::missing_estimate, "trimmed estimate has no confidence interval");
    const Json& props = report.at("partition").at("proportions");

    SensitivityInput in;
    in.tau3 = e.at("estimate").get<double>();
    in.tau3_ci_low = e.at("ci_low").get<double>();
    in.tau3_ci_high = e.at("ci_high").get<double>();
    in.p3_star = report.at("partition").at("p3_star").get<double>();
    const double p1 = props.at("p1").get<double>();
    in.p_hat = {p1, 1.0 - p1 - in.p3_star};
    if (sc.zeta) {
      in.zeta = sc.zeta;
    } else if (report.contains("zeta")) {
      const Json& z = report.at("zeta");
      // An empty group contributes nothing, whatever its effect.
      auto get = [&](const char* k) { return z.at(k).is_null() ? 0.0 : z.at(k).get<double>(); };
      in.zeta = std::array<double, 2>{get("R1"), get("R2")};
    }
    return sensitivity_sweep(in, with_unit(sc.k1_grid), with_unit(sc.k2_grid), sc.assumption);
  });
}

StudyReport cmd_simulate(const StudyConfig& config) { return run_study(config); }

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::data: return 3;
    case ErrorCategory::numerical: return 4;
  }
  return 1;
}

}  // namespace transport
