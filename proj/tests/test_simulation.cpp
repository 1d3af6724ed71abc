#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nonconc/dataset.hpp"
#include "nonconc/errors.hpp"
#include "nonconc/report.hpp"
#include "nonconc/simulation.hpp"

using namespace nonconc;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.n = 400;
  cfg.reps = 40;
  cfg.seed = 99;
  cfg.fractions = {0.5};
  return cfg;
}

bool datasets_identical(const TrialDataset& a, const TrialDataset& b) {
  if (a.n() != b.n()) return false;
  for (int i = 0; i < a.n(); ++i) {
    const TrialRecord &x = a.records[i], &y = b.records[i];
    if (x.entry_time != y.entry_time || x.arm != y.arm || x.outcome != y.outcome ||
        x.covariates != y.covariates || x.availability != y.availability)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("generation is deterministic in (seed, replication)") {
  const ScenarioConfig cfg = small_config();
  CHECK(datasets_identical(generate_single_arm(cfg, 0.3, 7),
                           generate_single_arm(cfg, 0.3, 7)));
  CHECK(!datasets_identical(generate_single_arm(cfg, 0.3, 7),
                            generate_single_arm(cfg, 0.3, 8)));
  CHECK(datasets_identical(generate_two_arm(cfg, 3), generate_two_arm(cfg, 3)));
}

TEST_CASE("generated datasets validate cleanly") {
  const ScenarioConfig cfg = small_config();
  CHECK(validate(generate_single_arm(cfg, 0.2, 1)).empty());
  CHECK(validate(generate_two_arm(cfg, 1)).empty());
  ScenarioConfig st = cfg;
  st.availability = AvailabilityMode::stochastic;
  CHECK(validate(generate_single_arm(st, 0.7, 2)).empty());
}

TEST_CASE("deterministic availability hits the quantile count exactly") {
  const ScenarioConfig cfg = small_config();
  for (double f : {0.1, 0.35, 0.9}) {
    const TrialDataset d = generate_single_arm(cfg, f, 5);
    int m = 0;
    for (const TrialRecord& r : d.records) m += r.availability[1];
    CHECK(m == static_cast<int>(std::lround(cfg.n * f)));
    // concurrent units are the earliest entrants
    for (int i = 0; i < m; ++i) CHECK(d.records[i].availability[1] == 1);
  }
}

TEST_CASE("covariate is centred by construction") {
  ScenarioConfig cfg = small_config();
  cfg.n = 5000;
  const TrialDataset d = generate_single_arm(cfg, 0.5, 11);
  double sw = 0;
  for (const TrialRecord& r : d.records) sw += r.covariates[0];
  // mean(W) = mean(noise): 3 sd / sqrt(n) band
  CHECK(std::fabs(sw / d.n()) < 3.0 / std::sqrt(double(d.n())));
}

TEST_CASE("controls only outside availability") {
  const TrialDataset d = generate_single_arm(small_config(), 0.4, 13);
  for (const TrialRecord& r : d.records)
    if (r.availability[1] == 0) CHECK(r.arm == 0);
}

TEST_CASE("two-arm availability windows give the stated strata exactly") {
  ScenarioConfig cfg = small_config();
  cfg.n = 1000;
  cfg.arms = ArmsMode::two_arm;
  const TrialDataset d = generate_two_arm(cfg, 2);
  int a_only = 0, b_only = 0, both = 0, neither = 0;
  for (const TrialRecord& r : d.records) {
    const bool va = r.availability[1], vb = r.availability[2];
    a_only += va && !vb;
    b_only += !va && vb;
    both += va && vb;
    neither += !va && !vb;
  }
  CHECK(a_only == 500);
  CHECK(both == 100);
  CHECK(b_only == 300);
  CHECK(neither == 100);
}

TEST_CASE("two-arm assignment probabilities are symmetric in the overlap stratum") {
  // pi_A and pi_B share the same formula; verify the multinomial draw frequencies
  ScenarioConfig cfg = small_config();
  cfg.n = 2000;
  cfg.arms = ArmsMode::two_arm;
  int na = 0, nb = 0, n_both = 0;
  for (int rep = 0; rep < 30; ++rep) {
    const TrialDataset d = generate_two_arm(cfg, rep);
    for (const TrialRecord& r : d.records) {
      if (!(r.availability[1] && r.availability[2])) continue;
      ++n_both;
      na += r.arm == 1;
      nb += r.arm == 2;
    }
  }
  const double pa = double(na) / n_both, pb = double(nb) / n_both;
  CHECK(std::fabs(pa - pb) < 3.0 * std::sqrt(0.5 / n_both));
  CHECK(na + nb < n_both);  // control arm takes the rest: probabilities sum to one
}

TEST_CASE("true estimands") {
  ScenarioConfig cfg = small_config();
  CHECK(true_estimand(cfg, 1) == 0.8);
  cfg.arms = ArmsMode::two_arm;
  CHECK(true_estimand(cfg, 1) == 0.5);
  CHECK(true_estimand(cfg, 2) == 1.0);
}

TEST_CASE("run_study aggregates with the mse identity and exact coverage bounds") {
  ScenarioConfig cfg = small_config();
  cfg.reps = 60;
  const MetricsTable t = run_study(cfg);
  for (const auto& [key, cm] : t.cells) {
    CHECK(cm.mse == doctest::Approx(cm.bias2 + cm.variance).epsilon(1e-12));
    CHECK(cm.coverage >= 0.0);
    CHECK(cm.coverage <= 1.0);
    CHECK(cm.n_reps + cm.n_failed == cfg.reps);
  }
  CHECK(t.ratios.count({0.5, "se_ratio_or"}) == 1);
  CHECK(t.ratios.count({0.5, "se_ratio_dr"}) == 1);
  CHECK(t.ratios.count({0.5, "ctrl_var_ratio_or"}) == 1);
}

TEST_CASE("replication streams are independent of the total rep count") {
  // the per-rep datasets define the study; check reps r=0..4 agree between runs
  ScenarioConfig cfg = small_config();
  for (int r = 0; r < 5; ++r) {
    const TrialDataset a = generate_single_arm(cfg, 0.5, r);
    ScenarioConfig cfg2 = cfg;
    cfg2.reps = 2 * cfg.reps;  // reps is not an input to generation
    const TrialDataset b = generate_single_arm(cfg2, 0.5, r);
    CHECK(datasets_identical(a, b));
  }
}

TEST_CASE("parallel study equals the sequential study") {
  ScenarioConfig cfg = small_config();
  cfg.reps = 24;
  const MetricsTable seq = run_study(cfg);
  cfg.jobs = 4;
  const MetricsTable par = run_study(cfg);
  for (const auto& [key, cm] : seq.cells) {
    const CellMetrics& pm = par.cells.at(key);
    CHECK(cm.bias2 == doctest::Approx(pm.bias2).epsilon(1e-15));
    CHECK(cm.variance == doctest::Approx(pm.variance).epsilon(1e-15));
    CHECK(cm.coverage == pm.coverage);
  }
}

TEST_CASE("run_study requires at least two replications") {
  ScenarioConfig cfg = small_config();
  cfg.reps = 1;
  CHECK_THROWS_AS(run_study(cfg), usage_error);
}

TEST_CASE("scenario file round trip and error reporting") {
  const std::string path = "nonconc_scenario_test.txt";
  {
    std::ofstream out(path);
    out << "# study file\n"
        << "n = 250\nreps = 12\nseed = 31\nfractions = 0.2, 0.6\n"
        << "availability = stochastic\noutcome_model = intercept-only\n"
        << "arms = single\neffect = 0.8\nestimators = OR-oc, DR-oc\njobs = 2\n"
        << "name = demo\n";
  }
  const ScenarioConfig cfg = load_scenario_file(path);
  CHECK(cfg.n == 250);
  CHECK(cfg.reps == 12);
  CHECK(cfg.seed == 31);
  CHECK(cfg.fractions == std::vector<double>{0.2, 0.6});
  CHECK(cfg.availability == AvailabilityMode::stochastic);
  CHECK(cfg.outcome_model == ModelSpecMode::intercept_only);
  CHECK(cfg.estimators == std::vector<std::string>{"OR-oc", "DR-oc"});
  CHECK(cfg.name == "demo");
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << "n = 100\nbogus_key = 3\n";
  }
  try {
    load_scenario_file(path);
    FAIL("expected usage_error");
  } catch (const usage_error& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("metrics csv has the long format") {
  ScenarioConfig cfg = small_config();
  cfg.reps = 10;
  cfg.estimators = {"OR-oc"};
  const MetricsTable t = run_study(cfg);
  std::ostringstream out;
  write_metrics_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "scenario,fraction,estimator,metric,value");
  int rows = 0;
  bool has_bias2 = false;
  while (std::getline(in, line)) {
    ++rows;
    has_bias2 |= line.find("bias2") != std::string::npos;
  }
  CHECK(rows >= 6);
  CHECK(has_bias2);
}
