#include <doctest.h>

#include <cmath>
#include <random>

#include "nonconc/diagnostics.hpp"
#include "nonconc/errors.hpp"
#include "nonconc/simulation.hpp"
#include "test_helpers.hpp"

using namespace nonconc;
using namespace nonconc::testing;

namespace {

TrialDataset drifted_trial(int n, unsigned seed, double nc_shift) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud;
  std::vector<TrialRecord> rs;
  for (int i = 0; i < n; ++i) {
    const double e = nd(gen), w = 0.8 * e + nd(gen);
    const bool conc = ud(gen) < 0.5;
    const int a = conc && ud(gen) < 0.5 ? 1 : 0;
    double y = 0.8 * w + 0.5 * e + nd(gen) + 0.8 * a;
    if (!conc) y += nc_shift;  // control-mean drift in the non-concurrent era
    rs.push_back(rec(e, {w}, conc, a, y));
  }
  return make_dataset(std::move(rs));
}

}  // namespace

TEST_CASE("pooling test is well-formed under the null") {
  const ScenarioConfig cfg = [] {
    ScenarioConfig c;
    c.n = 800;
    c.seed = 4242;
    return c;
  }();
  const TrialDataset data = generate_single_arm(cfg, 0.5, 1);
  const PoolingTestReport rep = pooling_test(data, {}, DesignSpec::full(1));
  CHECK(rep.dof == 3);  // intercept, w, entry-time interactions
  CHECK(rep.statistic >= 0.0);
  CHECK(rep.p_value >= 0.0);
  CHECK(rep.p_value <= 1.0);
  CHECK(rep.method_tag == "interaction-wald");
}

TEST_CASE("pooling test rejects a strong control-arm drift") {
  const TrialDataset data = drifted_trial(1000, 7, 1.0);
  const PoolingTestReport rep = pooling_test(data, {}, DesignSpec::full(1));
  CHECK(rep.reject);
  CHECK(rep.p_value < 0.001);
}

TEST_CASE("pooling decision is invariant to affine outcome rescaling") {
  const TrialDataset data = drifted_trial(600, 11, 0.3);
  TrialDataset scaled = data;
  for (TrialRecord& r : scaled.records) r.outcome = 3.7 * r.outcome - 12.0;
  const PoolingTestReport a = pooling_test(data, {}, DesignSpec::full(1));
  const PoolingTestReport b = pooling_test(scaled, {}, DesignSpec::full(1));
  CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-8));
}

TEST_CASE("pooling test requires both concurrency strata among controls") {
  std::vector<TrialRecord> rs;
  for (int i = 0; i < 40; ++i)
    rs.push_back(rec(0.01 * i, {0.1 * i}, 1, i % 2, 1.0 * i));  // all concurrent
  auto data = make_dataset(std::move(rs));
  CHECK_THROWS_AS(pooling_test(data, {}, DesignSpec::full(1)), data_error);
}
