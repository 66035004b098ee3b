#include <doctest.h>

#include <cmath>

#include "rangekit/rng.hpp"
#include "rangekit/stats.hpp"

using namespace rangekit;

TEST_CASE("running stat merge equals sequential accumulation") {
  RngStream rng(1, 1);
  RunningStat whole, left, right;
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.gaussian() * 3.0 + 1.0;
    whole.add(x);
    (i < 400 ? left : right).add(x);
  }
  left.merge(right);
  CHECK(left.count() == whole.count());
  CHECK(left.mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
}

TEST_CASE("ks distance on hand cases") {
  CHECK(ks_distance({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
  CHECK(ks_distance({0, 0, 0}, {1, 1, 1}) == doctest::Approx(1.0));
  // Half-shifted samples: F differs by 1/2 between the interleaved points.
  CHECK(ks_distance({1, 3}, {2, 4}) == doctest::Approx(0.5));
}

TEST_CASE("chi square gof accepts its own distribution and rejects a wrong one") {
  RngStream rng(7, 0);
  std::vector<double> expected{0.5, 0.25, 0.125, 0.125};
  std::vector<double> obs(4, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t b = 3;
    for (std::size_t j = 0; j < 4; ++j) {
      u -= expected[j];
      if (u < 0) {
        b = j;
        break;
      }
    }
    obs[b] += 1;
  }
  const auto good = chi_square_gof(obs, expected);
  CHECK(good.p_value > 0.01);
  const auto bad = chi_square_gof(obs, {0.25, 0.25, 0.25, 0.25});
  CHECK(bad.p_value < 1e-6);
}

TEST_CASE("line fit recovers exact lines and weights") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double xi : x) y.push_back(2.5 * xi - 1.0);
  const LineFit f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-1.0).epsilon(1e-12));
  const LineFit w = fit_line(x, y, {0.1, 0.1, 0.1, 0.1, 0.1});
  CHECK(w.slope == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(w.slope_se > 0.0);
}

TEST_CASE("aitken recovers the limit of exact geometric sequences") {
  for (double ratio : {0.5, 0.25, 2.0, 4.0}) {
    std::vector<double> levels;
    double a = 0.3;
    for (int i = 0; i < 3; ++i) {
      levels.push_back(1.7 + a);
      a *= ratio;
    }
    const Extrapolation e = aitken(levels);
    CHECK(e.value == doctest::Approx(1.7).epsilon(1e-10));
  }
  // Flat input: keep the last level, converged.
  const Extrapolation flat = aitken({2.0, 2.0, 2.0});
  CHECK(flat.value == doctest::Approx(2.0));
  CHECK(flat.converged);
}
