#include <doctest.h>

#include <cmath>

#include "nonconc/rng.hpp"
#include "nonconc/stats.hpp"

using namespace nonconc;

TEST_CASE("normal quantile inverts the normal cdf") {
  for (double p : {1e-9, 1e-4, 0.025, 0.31, 0.5, 0.69, 0.975, 1.0 - 1e-4}) {
    const double x = normal_quantile(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-12));
}

TEST_CASE("two sided p-values") {
  CHECK(two_sided_p(0.0) == doctest::Approx(1.0));
  CHECK(two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-10));
  CHECK(two_sided_p(-2.575829303548901) == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("chi-square tail") {
  // known values: P(chi2_1 > 3.841459) = 0.05, P(chi2_3 > 7.814728) = 0.05
  CHECK(chisq_tail(3.8414588206941236, 1) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(chisq_tail(7.814727903251178, 3) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(chisq_cdf(0.0, 3) == doctest::Approx(0.0));
  CHECK(chisq_tail(11.344866730144371, 3) == doctest::Approx(0.01).epsilon(1e-8));
}

TEST_CASE("counter rng determinism and stream independence") {
  CounterRng a(42, substream(7, 1));
  CounterRng b(42, substream(7, 1));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CounterRng c(42, substream(8, 1));
  CounterRng d(42, substream(7, 2));
  bool differs_c = false, differs_d = false;
  CounterRng a2(42, substream(7, 1));
  for (int i = 0; i < 32; ++i) {
    const auto x = a2.next_u64();
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("rng moments are sane") {
  CounterRng rng(1, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.uniform();
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(3e-3));
  CHECK(sn / n == doctest::Approx(0.0).epsilon(1.0).scale(0.01));
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(1e-2));
}
