#include "nonconc/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "nonconc/errors.hpp"
#include "nonconc/rng.hpp"
#include "nonconc/stats.hpp"

namespace nonconc {

namespace {

// Variable ids for per-replication substreams.
enum RngVar : unsigned { kVarEntry = 0, kVarCov = 1, kVarAvail = 2, kVarAssign = 3, kVarOutcome = 4 };

std::vector<double> draw_normals(const ScenarioConfig& config, std::uint64_t rep,
                                 unsigned var, int n) {
  CounterRng rng(config.seed, substream(rep, var));
  std::vector<double> out(n);
  for (double& x : out) x = rng.normal();
  return out;
}

std::vector<double> draw_uniforms(const ScenarioConfig& config, std::uint64_t rep,
                                  unsigned var, int n) {
  CounterRng rng(config.seed, substream(rep, var));
  std::vector<double> out(n);
  for (double& x : out) x = rng.uniform();
  return out;
}

// m-th smallest value (1-based).
double order_stat(std::vector<double> v, int m) {
  std::nth_element(v.begin(), v.begin() + (m - 1), v.end());
  return v[m - 1];
}

}  // namespace

TrialDataset generate_single_arm(const ScenarioConfig& config, double fraction,
                                 std::uint64_t rep_index) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw usage_error("concurrent fraction must be in (0,1)");
  const int n = config.n;
  const std::vector<double> e = draw_normals(config, rep_index, kVarEntry, n);
  const std::vector<double> uw = draw_normals(config, rep_index, kVarCov, n);

  double k1 = 0.0;
  for (double x : e) k1 += 0.8 * x;
  k1 /= n;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = -k1 + 0.8 * e[i] + uw[i];

  // Availability: arm open from trial start until the m-th entrant.
  const int m = std::clamp(static_cast<int>(std::lround(n * fraction)), 1, n - 1);
  const double threshold = order_stat(e, m);
  std::vector<std::uint8_t> v(n);
  if (config.availability == AvailabilityMode::deterministic) {
    for (int i = 0; i < n; ++i) v[i] = e[i] <= threshold ? 1 : 0;
  } else {
    double k4 = threshold;
    for (double x : e) k4 += 0.5 * x / n;
    const std::vector<double> uv = draw_uniforms(config, rep_index, kVarAvail, n);
    for (int i = 0; i < n; ++i) v[i] = uv[i] < expit(k4 - 0.5 * e[i]) ? 1 : 0;
  }

  double k2 = 0.0;
  for (double x : w) k2 += 0.8 * x;
  k2 /= n;
  const std::vector<double> ua = draw_uniforms(config, rep_index, kVarAssign, n);
  const std::vector<double> uy = draw_normals(config, rep_index, kVarOutcome, n);

  std::vector<TrialRecord> records(n);
  for (int i = 0; i < n; ++i) {
    const int a = (v[i] == 1 && ua[i] < expit(-k2 + 0.8 * w[i])) ? 1 : 0;
    TrialRecord& r = records[i];
    r.entry_time = e[i];
    r.covariates = {w[i]};
    r.availability = {1, v[i]};
    r.arm = a;
    r.outcome = 0.8 * w[i] + 0.5 * e[i] + uy[i] + config.effect * a;
  }
  return TrialDataset::from_records(std::move(records), {"w1"}, 2);
}

TrialDataset generate_two_arm(const ScenarioConfig& config, std::uint64_t rep_index) {
  const int n = config.n;
  const std::vector<double> e = draw_normals(config, rep_index, kVarEntry, n);
  const std::vector<double> uw = draw_normals(config, rep_index, kVarCov, n);
  double k1 = 0.0;
  for (double x : e) k1 += 0.8 * x;
  k1 /= n;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = -k1 + 0.8 * e[i] + uw[i];

  // Entry-rank availability windows: arm 1 over [0, 60%), arm 2 over [50%, 90%).
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&e](int a, int b) { return e[a] < e[b]; });
  std::vector<int> rank(n);
  for (int r = 0; r < n; ++r) rank[idx[r]] = r;
  const int m60 = static_cast<int>(std::lround(0.6 * n));
  const int m50 = static_cast<int>(std::lround(0.5 * n));
  const int m90 = static_cast<int>(std::lround(0.9 * n));

  double k2 = 0.0;
  for (double x : w) k2 += 0.8 * x;
  k2 /= n;
  const std::vector<double> ua = draw_uniforms(config, rep_index, kVarAssign, n);
  const std::vector<double> uy = draw_normals(config, rep_index, kVarOutcome, n);

  std::vector<TrialRecord> records(n);
  for (int i = 0; i < n; ++i) {
    const bool va = rank[i] < m60;
    const bool vb = rank[i] >= m50 && rank[i] < m90;
    int arm = 0;
    const double lin = -k2 + 0.8 * w[i];
    if (va && !vb) {
      arm = ua[i] < expit(lin) ? 1 : 0;
    } else if (!va && vb) {
      arm = ua[i] < expit(lin) ? 2 : 0;
    } else if (va && vb) {
      const double et = std::exp(-lin);
      const double tau = 1.0 + 2.0 * et;
      const double p0 = 1.0 / tau, pa = et / tau;
      arm = ua[i] < p0 ? 0 : (ua[i] < p0 + pa ? 1 : 2);
    }
    TrialRecord& r = records[i];
    r.entry_time = e[i];
    r.covariates = {w[i]};
    r.availability = {1, static_cast<std::uint8_t>(va), static_cast<std::uint8_t>(vb)};
    r.arm = arm;
    r.outcome = 0.8 * w[i] + 0.5 * e[i] + uy[i] +
                (arm == 1 ? config.effect_a : arm == 2 ? config.effect_b : 0.0);
  }
  return TrialDataset::from_records(std::move(records), {"w1"}, 3);
}

double true_estimand(const ScenarioConfig& config, int treated_arm) {
  if (config.arms == ArmsMode::single) return config.effect;
  if (treated_arm == 1) return config.effect_a;
  if (treated_arm == 2) return config.effect_b;
  throw usage_error("true_estimand: unknown treated arm");
}

namespace {

struct RepOutcome {
  // per estimator tag: (point, se); nullopt on failure
  std::vector<std::optional<std::pair<double, double>>> est;
  // control-arm mean component diagnostics (single-arm studies)
  double v0_oc = 0.0, v0_ac = 0.0, mu0_oc = 0.0, mu0_ac = 0.0;
  bool have_ctrl = false;
};

struct CellKey {
  double key;
  std::string label;
  ContrastSpec contrast;
  double truth;
};

void aggregate(MetricsTable& table, const ScenarioConfig& config, const CellKey& cell,
               const std::vector<RepOutcome>& outs) {
  for (std::size_t t = 0; t < config.estimators.size(); ++t) {
    std::vector<double> pts, ses;
    int covered = 0, failed = 0;
    for (const RepOutcome& ro : outs) {
      if (!ro.est[t]) {
        ++failed;
        continue;
      }
      const auto [pt, se] = *ro.est[t];
      pts.push_back(pt);
      ses.push_back(se);
      if (pt - 1.96 * se <= cell.truth && cell.truth <= pt + 1.96 * se) ++covered;
    }
    if (failed > static_cast<int>(0.1 * outs.size()))
      throw numeric_error("run_study: estimator " + config.estimators[t] + " failed in " +
                          std::to_string(failed) + "/" + std::to_string(outs.size()) +
                          " replications");
    CellMetrics cm;
    cm.n_reps = static_cast<int>(pts.size());
    cm.n_failed = failed;
    if (!pts.empty()) {
      const double mp = mean(pts);
      cm.bias2 = (mp - cell.truth) * (mp - cell.truth);
      cm.variance = pop_variance(pts);
      double mse = 0.0;
      for (double p : pts) mse += (p - cell.truth) * (p - cell.truth);
      cm.mse = mse / pts.size();
      cm.coverage = static_cast<double>(covered) / pts.size();
      cm.mean_se = mean(ses);
    }
    table.cells[{cell.key, config.estimators[t]}] = cm;
  }

  auto mean_se_of = [&](const std::string& tag) -> std::optional<double> {
    auto it = std::find(config.estimators.begin(), config.estimators.end(), tag);
    if (it == config.estimators.end()) return std::nullopt;
    const auto& cm = table.cells[{cell.key, tag}];
    return cm.mean_se;
  };
  if (auto so = mean_se_of("OR-oc"), sa = mean_se_of("OR-ac"); so && sa && *sa > 0)
    table.ratios[{cell.key, "se_ratio_or"}] = *so / *sa;
  if (auto so = mean_se_of("DR-oc"), sa = mean_se_of("DR-ac"); so && sa && *sa > 0)
    table.ratios[{cell.key, "se_ratio_dr"}] = *so / *sa;

  std::vector<double> voc, vac, m0oc, m0ac;
  for (const RepOutcome& ro : outs)
    if (ro.have_ctrl) {
      voc.push_back(ro.v0_oc);
      vac.push_back(ro.v0_ac);
      m0oc.push_back(ro.mu0_oc);
      m0ac.push_back(ro.mu0_ac);
    }
  if (!voc.empty()) {
    table.ratios[{cell.key, "ctrl_var_ratio_or"}] = mean(voc) / mean(vac);
    table.ratios[{cell.key, "ctrl_var_ratio_or_mc"}] =
        pop_variance(m0oc) / pop_variance(m0ac);
  }
}

}  // namespace

MetricsTable run_study(const ScenarioConfig& config) {
  if (config.reps < 2) throw usage_error("run_study: reps >= 2 required");
  if (config.estimators.empty()) throw usage_error("run_study: no estimators selected");

  const DesignSpec outcome_design = config.outcome_model == ModelSpecMode::correct
                                        ? DesignSpec::full(1)
                                        : DesignSpec::intercept_only();
  const DesignSpec treatment_design = config.treatment_model == ModelSpecMode::correct
                                          ? DesignSpec::full(1)
                                          : DesignSpec::intercept_only();
  const bool det_nu = config.availability == AvailabilityMode::deterministic;

  std::vector<CellKey> cells;
  if (config.arms == ArmsMode::single) {
    for (double f : config.fractions) {
      ContrastSpec c;
      c.treated_arm = 1;
      cells.push_back({f, "f=" + std::to_string(f), c, true_estimand(config, 1)});
    }
  } else {
    const std::vector<std::tuple<int, std::map<int, bool>, std::string>> defs = {
        {1, {{1, true}}, "E[Y(A)-Y(0)|V_A=1]"},
        {1, {{1, true}, {2, false}}, "E[Y(A)-Y(0)|V_A=1,V_B=0]"},
        {1, {{1, true}, {2, true}}, "E[Y(A)-Y(0)|V_A=1,V_B=1]"},
        {2, {{2, true}}, "E[Y(B)-Y(0)|V_B=1]"},
        {2, {{1, false}, {2, true}}, "E[Y(B)-Y(0)|V_A=0,V_B=1]"},
        {2, {{1, true}, {2, true}}, "E[Y(B)-Y(0)|V_A=1,V_B=1]"}};
    double key = 1.0;
    for (const auto& [arm, cond, label] : defs) {
      ContrastSpec c;
      c.treated_arm = arm;
      c.conditioning = cond;
      cells.push_back({key, label, c, true_estimand(config, arm)});
      key += 1.0;
    }
  }

  MetricsTable table;
  table.scenario_name = config.name;
  table.true_effect = true_estimand(config, 1);
  for (const CellKey& cell : cells) table.key_labels[cell.key] = cell.label;

  const bool two_arm = config.arms == ArmsMode::two_arm;
  // Single-arm: one (fraction, rep) task per replication per fraction.
  // Two-arm: one dataset per replication, all contrasts evaluated on it.
  for (std::size_t ci = 0; ci < (two_arm ? std::size_t{1} : cells.size()); ++ci) {
    std::vector<std::vector<RepOutcome>> outs(two_arm ? cells.size() : 1);
    for (auto& o : outs) o.resize(config.reps);

    std::atomic<int> next{0};
    std::exception_ptr worker_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= config.reps) return;
        try {
          const TrialDataset data =
              two_arm ? generate_two_arm(config, rep)
                      : generate_single_arm(config, cells[ci].key, rep);
          const std::size_t c_begin = two_arm ? 0 : ci;
          const std::size_t c_end = two_arm ? cells.size() : ci + 1;
          for (std::size_t c = c_begin; c < c_end; ++c) {
            RepOutcome& ro = outs[two_arm ? c : 0][rep];
            ro.est.resize(config.estimators.size());
            std::optional<NuisanceBundle> bundle;
            try {
              bundle = fit_nuisances(data, cells[c].contrast, outcome_design,
                                     treatment_design, det_nu);
            } catch (const std::runtime_error&) {
            }
            for (std::size_t t = 0; t < config.estimators.size(); ++t) {
              if (!bundle && config.estimators[t] != "naive") continue;
              try {
                const auto rep_out =
                    config.estimators[t] == "naive"
                        ? std::vector<EstimateReport>{estimate_naive(data,
                                                                     cells[c].contrast)}
                        : estimate_all(data, cells[c].contrast, *bundle,
                                       {config.estimators[t]});
                ro.est[t] = {rep_out[0].point, rep_out[0].se};
              } catch (const std::runtime_error&) {
              }
            }
            if (!two_arm && bundle) {
              try {
                const EstimatingStack oc = build_or_oc_stack(
                    data, cells[c].contrast, bundle->mu_oc_control, bundle->mu_oc_treated);
                const EstimatingStack ac = build_or_ac_stack(
                    data, cells[c].contrast, bundle->mu_all_control, bundle->mu_oc_treated);
                const SandwichResult soc = sandwich(oc), sac = sandwich(ac);
                const int i_oc = oc.block("mu0").first, i_ac = ac.block("mu0").first;
                ro.v0_oc = soc.cov(i_oc, i_oc);
                ro.v0_ac = sac.cov(i_ac, i_ac);
                ro.mu0_oc = oc.theta(i_oc);
                ro.mu0_ac = ac.theta(i_ac);
                ro.have_ctrl = true;
              } catch (const std::runtime_error&) {
              }
            }
          }
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!worker_error) worker_error = std::current_exception();
          return;
        }
      }
    };

    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (worker_error) std::rethrow_exception(worker_error);

    if (two_arm) {
      for (std::size_t c = 0; c < cells.size(); ++c)
        aggregate(table, config, cells[c], outs[c]);
    } else {
      aggregate(table, config, cells[ci], outs[0]);
    }
  }
  return table;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_line(const std::string& path, int line, const std::string& msg) {
  throw usage_error(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open scenario file: " + path);
  ScenarioConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) bad_line(path, lineno, "expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    try {
      if (key == "n")
        cfg.n = std::stoi(val);
      else if (key == "reps")
        cfg.reps = std::stoi(val);
      else if (key == "seed")
        cfg.seed = std::stoull(val);
      else if (key == "fraction" || key == "fractions") {
        cfg.fractions.clear();
        for (const std::string& f : split(val, ','))
          if (!f.empty()) cfg.fractions.push_back(std::stod(f));
        if (cfg.fractions.empty()) bad_line(path, lineno, "no fractions given");
      } else if (key == "availability") {
        if (val == "deterministic")
          cfg.availability = AvailabilityMode::deterministic;
        else if (val == "stochastic")
          cfg.availability = AvailabilityMode::stochastic;
        else
          bad_line(path, lineno, "availability must be deterministic|stochastic");
      } else if (key == "outcome_model" || key == "treatment_model") {
        ModelSpecMode mode;
        if (val == "correct")
          mode = ModelSpecMode::correct;
        else if (val == "intercept-only" || val == "intercept_only")
          mode = ModelSpecMode::intercept_only;
        else
          bad_line(path, lineno, key + " must be correct|intercept-only");
        (key == "outcome_model" ? cfg.outcome_model : cfg.treatment_model) = mode;
      } else if (key == "arms") {
        if (val == "single")
          cfg.arms = ArmsMode::single;
        else if (val == "two-arm" || val == "two_arm")
          cfg.arms = ArmsMode::two_arm;
        else
          bad_line(path, lineno, "arms must be single|two-arm");
      } else if (key == "effect")
        cfg.effect = std::stod(val);
      else if (key == "effect_a")
        cfg.effect_a = std::stod(val);
      else if (key == "effect_b")
        cfg.effect_b = std::stod(val);
      else if (key == "estimators") {
        cfg.estimators = split(val, ',');
        if (cfg.estimators.empty()) bad_line(path, lineno, "no estimators given");
      } else if (key == "jobs")
        cfg.jobs = std::stoi(val);
      else if (key == "name")
        cfg.name = val;
      else
        bad_line(path, lineno, "unknown key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      bad_line(path, lineno, "cannot parse value \"" + val + "\" for " + key);
    } catch (const std::out_of_range&) {
      bad_line(path, lineno, "value out of range: " + val);
    }
  }
  return cfg;
}

}  // namespace nonconc
