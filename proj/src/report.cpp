#include "nonconc/report.hpp"

#include <json.hpp>
#include <ostream>
#include <sstream>

#include "nonconc/rng.hpp"

namespace nonconc {

using nlohmann::json;

std::string p_display(double p) {
  if (p < 0.01) return "<0.01";
  std::ostringstream ss;
  ss.precision(2);
  ss << std::fixed << p;
  return ss.str();
}

namespace {

std::optional<double> naive_se(const std::vector<EstimateReport>& reports) {
  for (const EstimateReport& r : reports)
    if (r.estimator == "naive" && r.se > 0) return r.se;
  return std::nullopt;
}

json report_json(const EstimateReport& r, std::optional<double> base_se,
                 bool include_influence) {
  json j{{"method", r.estimator}, {"estimate", r.point},     {"se", r.se},
         {"ci_low", r.ci_low},    {"ci_high", r.ci_high},    {"p_value", r.p_value},
         {"p_display", p_display(r.p_value)},                {"n_used", r.n_used}};
  if (base_se) j["se_ratio_vs_naive"] = *base_se / r.se;
  if (r.extrapolation_warning) j["extrapolation_warning"] = true;
  if (include_influence && !r.influence.empty()) j["influence"] = r.influence;
  return j;
}

json pooling_json(const PoolingTestReport& p) {
  return json{{"method", p.method_tag}, {"statistic", p.statistic},
              {"dof", p.dof},           {"p_value", p.p_value},
              {"alpha", p.alpha},       {"decision", p.reject ? "do-not-pool" : "pool"}};
}

}  // namespace

void write_estimate_csv(std::ostream& out, const std::vector<EstimateReport>& reports,
                        const std::optional<PoolingTestReport>& pooling) {
  const std::optional<double> base = naive_se(reports);
  out << "method,estimate,se,ci_low,ci_high,p_value,p_display,se_ratio_vs_naive\n";
  out.precision(10);
  for (const EstimateReport& r : reports) {
    out << r.estimator << ',' << r.point << ',' << r.se << ',' << r.ci_low << ','
        << r.ci_high << ',' << r.p_value << ',' << p_display(r.p_value) << ',';
    if (base && r.se > 0) out << *base / r.se;
    out << '\n';
  }
  for (const EstimateReport& r : reports)
    if (r.extrapolation_warning)
      out << "# " << r.estimator
          << ": extrapolation estimand ATE(k); relies on an untestable assumption\n";
  if (pooling)
    out << "# pooling-test: statistic=" << pooling->statistic << " dof=" << pooling->dof
        << " p=" << pooling->p_value << " -> "
        << (pooling->reject ? "do-not-pool (OR-ac/DR-ac rely on pooling)" : "pool") << '\n';
}

void write_estimate_json(std::ostream& out, const std::vector<EstimateReport>& reports,
                         const std::optional<PoolingTestReport>& pooling,
                         bool include_influence) {
  const std::optional<double> base = naive_se(reports);
  json j;
  j["reports"] = json::array();
  for (const EstimateReport& r : reports)
    j["reports"].push_back(report_json(r, base, include_influence));
  if (pooling) j["pooling_test"] = pooling_json(*pooling);
  out << j.dump(2) << '\n';
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << "scenario,fraction,estimator,metric,value\n";
  out.precision(10);
  for (const auto& [key, cm] : table.cells) {
    const auto& [frac, tag] = key;
    const auto emit = [&](const char* metric, double value) {
      out << table.scenario_name << ',' << frac << ',' << tag << ',' << metric << ','
          << value << '\n';
    };
    emit("bias2", cm.bias2);
    emit("variance", cm.variance);
    emit("mse", cm.mse);
    emit("coverage", cm.coverage);
    emit("mean_se", cm.mean_se);
    emit("failures", cm.n_failed);
  }
  for (const auto& [key, value] : table.ratios) {
    const auto& [frac, name] = key;
    out << table.scenario_name << ',' << frac << ',' << "pair" << ',' << name << ','
        << value << '\n';
  }
}

void write_pooling_json(std::ostream& out, const PoolingTestReport& report) {
  out << pooling_json(report).dump(2) << '\n';
}

void write_manifest_json(std::ostream& out, const ScenarioConfig& config,
                         double wall_seconds) {
  json j;
  j["artifact_version"] = kArtifactVersion;
  j["generator"] = kGeneratorName;
  j["seed"] = config.seed;
  j["wall_seconds"] = wall_seconds;
  j["notes"] = json::array(
      {"kappa3 in the stochastic availability model is the E-threshold value from the "
       "deterministic rule, not its quantile level"});
  json c;
  c["n"] = config.n;
  c["reps"] = config.reps;
  c["fractions"] = config.fractions;
  c["availability"] =
      config.availability == AvailabilityMode::deterministic ? "deterministic" : "stochastic";
  c["outcome_model"] =
      config.outcome_model == ModelSpecMode::correct ? "correct" : "intercept-only";
  c["treatment_model"] =
      config.treatment_model == ModelSpecMode::correct ? "correct" : "intercept-only";
  c["arms"] = config.arms == ArmsMode::single ? "single" : "two-arm";
  c["effect"] = config.effect;
  c["effect_a"] = config.effect_a;
  c["effect_b"] = config.effect_b;
  c["estimators"] = config.estimators;
  c["jobs"] = config.jobs;
  c["name"] = config.name;
  j["config"] = c;
  out << j.dump(2) << '\n';
}

}  // namespace nonconc
