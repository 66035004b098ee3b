#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rangekit/brownian.hpp"
#include "rangekit/specfun.hpp"

using namespace rangekit;

namespace {

// k-fold nested loop over nondecreasing index tuples with the same
// trapezoidal half-weights on repeated consecutive indices as the
// recursion; independent of the recursion path.
double alpha_brute(const BrownPath& p, int k, double eps, double t) {
  const std::int64_t n = std::int64_t(std::llround(t / p.h));
  const double norm = 1.0 / (kTwoPi * eps);
  const double inv2e = 1.0 / (2.0 * eps);
  double total = 0.0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, int depth, std::int64_t lo, double prod) -> void {
    if (depth == k) {
      total += prod;
      return;
    }
    for (std::int64_t i = lo; i < n; ++i) {
      double factor = 1.0;
      if (depth > 0) {
        const std::int64_t q = idx[std::size_t(depth - 1)];
        const double dx = p.xs[std::size_t(i)] - p.xs[std::size_t(q)];
        const double dy = p.ys[std::size_t(i)] - p.ys[std::size_t(q)];
        factor = norm * std::exp(-(dx * dx + dy * dy) * inv2e);
        if (i == q) factor *= 0.5;
      }
      idx[std::size_t(depth)] = i;
      self(self, depth + 1, i, prod * factor);
    }
  };
  rec(rec, 0, 0, 1.0);
  double hp = 1.0;
  for (int q = 0; q < k; ++q) hp *= p.h;
  return total * hp;
}

}  // namespace

TEST_CASE("brownian paths: start, variance, determinism, refinement") {
  const BrownPath p = simulate_bm(0.01, 1.0, 5, 0);
  CHECK(p.xs[0] == 0.0);
  CHECK(p.ys[0] == 0.0);
  CHECK(p.steps() == 100);

  const BrownPath q = simulate_bm(0.01, 1.0, 5, 0);
  CHECK(p.xs == q.xs);

  const int replicas = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < replicas; ++r) {
    const BrownPath w = simulate_bm(0.01, 1.0, 6, std::uint64_t(r));
    const double v = w.xs.back() * w.xs.back() + w.ys.back() * w.ys.back();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / replicas;
  const double se = std::sqrt((sumsq / replicas - mean * mean) / replicas);
  CHECK(std::fabs(mean - 2.0) < 4.0 * se);

  // Refining h halves the per-step increment variance.
  const BrownPath c = simulate_bm(0.02, 1.0, 7, 0);
  const BrownPath f = simulate_bm(0.01, 1.0, 7, 1);
  auto inc_var = [](const BrownPath& w) {
    double s = 0.0;
    for (std::size_t i = 1; i < w.xs.size(); ++i) {
      const double dx = w.xs[i] - w.xs[i - 1];
      s += dx * dx;
    }
    return s / double(w.steps());
  };
  CHECK(inc_var(f) < 0.75 * inc_var(c));
}

TEST_CASE("alpha recursion: exact order-1 value and brute-force equivalence") {
  const BrownPath p = simulate_bm(0.02, 1.0, 11, 0);
  CHECK(alpha_k_eps(p, 1, 0.1, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(alpha_k_eps(p, 1, 0.1, 0.5) == doctest::Approx(0.5).epsilon(1e-14));

  for (std::uint64_t s = 0; s < 5; ++s) {
    const BrownPath w = simulate_bm(0.02, 1.0, 12, s);  // N = 50
    for (int k = 2; k <= 3; ++k) {
      for (double eps : {0.3, 0.08}) {
        const double rec = alpha_k_eps(w, k, eps, 1.0);
        const double brute = alpha_brute(w, k, eps, 1.0);
        CHECK(rec == doctest::Approx(brute).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("grid-accelerated pair sum matches the recursion") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const BrownPath w = simulate_bm(5e-4, 1.0, 13, s);  // N = 2000
    for (double ef : {16.0, 8.0, 4.0}) {
      const double eps = ef * w.h;
      const double grid = alpha_2_grid(w, eps, 1.0);
      const double rec = alpha_k_eps(w, 2, eps, 1.0);
      CHECK(grid == doctest::Approx(rec).epsilon(2e-5));
    }
  }
}

TEST_CASE("u_eps: closed form, monotonicity, small-eps constant") {
  CHECK(u_eps(0.01) == doctest::Approx(0.649115256683).epsilon(1e-9));
  CHECK(u_eps(0.1) == doctest::Approx(0.320640319554).epsilon(1e-9));
  double prev = u_eps(1e-4);
  for (double eps : {1e-3, 1e-2, 0.1, 1.0}) {
    const double v = u_eps(eps);
    CHECK(v < prev);
    prev = v;
  }
  // u_eps - (1/2pi) log(1/eps) -> -euler_gamma / 2pi.
  const double c = u_eps(1e-6) - std::log(1e6) / kTwoPi;
  CHECK(c == doctest::Approx(-kEulerGamma / kTwoPi).epsilon(1e-4));
}

TEST_CASE("u1: closed form, decay, small-argument constant, domain error") {
  CHECK(u_one(0.1, 0.0) == doctest::Approx(0.664416205993).epsilon(1e-9));
  CHECK(u_one(1.0, 0.0) == doctest::Approx(0.076121329878).epsilon(1e-9));
  CHECK(u_one(3.0, 0.0) == doctest::Approx(0.002710019913).epsilon(1e-8));
  CHECK(u_one(0.6, 0.8) == doctest::Approx(u_one(1.0, 0.0)).epsilon(1e-12));
  CHECK(u_one(0.1, 0.0) > u_one(0.2, 0.0));
  // u1(y) - (1/pi) log(1/|y|) -> (log 2 / 2 - euler_gamma) / pi.
  const double c = u_one(1e-4, 0.0) - std::log(1e4) / kPi;
  CHECK(c == doctest::Approx((0.5 * std::log(2.0) - kEulerGamma) / kPi).epsilon(1e-5));
  CHECK_THROWS_AS(u_one(0.0, 0.0), std::domain_error);
}

TEST_CASE("gamma pipeline: order one is time, under-resolution is flagged") {
  const BrownPath p = simulate_bm(1e-3, 1.0, 21, 0);
  const GammaResult g1 = gamma_k(p, 1, 1.0, {16e-3, 8e-3, 4e-3});
  CHECK(g1.value() == doctest::Approx(1.0).epsilon(1e-14));
  for (double lv : g1.extrapolation.levels) CHECK(lv == doctest::Approx(1.0));
  CHECK_FALSE(g1.under_resolved);

  const GammaResult low = gamma_k(p, 2, 1.0, {16e-3, 8e-3, 2e-3});
  CHECK(low.under_resolved);
}

TEST_CASE("renormalization transform: identity, expansion, round trip, composition") {
  const std::vector<double> vals{0.3, -0.7, 1.2, 0.05, -2.0, 0.9};
  const auto id = renorm_transform(vals, 0.0);
  for (std::size_t i = 0; i < vals.size(); ++i) CHECK(id[i] == doctest::Approx(vals[i]));

  // Order two expands to gamma_2 - b gamma_1.
  const auto t = renorm_transform(vals, 0.4);
  CHECK(t[0] == doctest::Approx(vals[0]));
  CHECK(t[1] == doctest::Approx(vals[1] - 0.4 * vals[0]).epsilon(1e-14));

  RngStream rng(3, 9);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> v(6);
    for (double& x : v) x = 2.0 * rng.uniform() - 1.0;
    const double b = 2.0 * rng.uniform() - 1.0;
    const double b2 = 2.0 * rng.uniform() - 1.0;
    const auto back = renorm_transform(renorm_transform(v, b), -b);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(std::fabs(back[i] - v[i]) <= 1e-12);
    // Composition adds the shifts.
    const auto ab = renorm_transform(renorm_transform(v, b), b2);
    const auto once = renorm_transform(v, b + b2);
    for (std::size_t i = 0; i < v.size(); ++i)
      CHECK(ab[i] == doctest::Approx(once[i]).epsilon(1e-10));
  }
}

TEST_CASE("custom counter-terms: u schedule reproduces gamma, shifts transform exactly") {
  const BrownPath p = simulate_bm(1e-3, 1.0, 31, 0);
  const std::vector<double> eps{16e-3, 8e-3, 4e-3};
  const CounterTerm u = u_counter_term(eps);
  const GammaResult via_u = hat_gamma(p, 2, 1.0, u);
  const GammaResult plain = gamma_k(p, 2, 1.0, eps);
  for (std::size_t i = 0; i < eps.size(); ++i)
    CHECK(via_u.extrapolation.levels[i] ==
          doctest::Approx(plain.extrapolation.levels[i]).epsilon(1e-14));

  // Constant shift b: each finite-eps level obeys the binomial transform
  // exactly, so the shifted run equals the transformed plain run level by
  // level (k = 2: hat = gamma - b * t).
  const double b = 0.37;
  CounterTerm shifted = u;
  for (double& v : shifted.value) v += b;
  const GammaResult hat = hat_gamma(p, 2, 1.0, shifted);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double expect = plain.extrapolation.levels[i] - b * 1.0;
    CHECK(hat.extrapolation.levels[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("path rescaling: identity at r=1, law preserved, exact grid map") {
  const BrownPath p = simulate_bm(1e-3, 1.0, 41, 0);
  const BrownPath same = rescale_path(p, 1.0);
  CHECK(same.xs == p.xs);
  CHECK(same.h == p.h);

  const BrownPath r4 = rescale_path(p, 4.0);
  CHECK(r4.h == doctest::Approx(p.h / 4.0));
  CHECK(r4.steps() == p.steps());
  // Increment variance per step is h*I in law: pooled z-scores stay sane.
  double s2 = 0.0;
  for (std::size_t i = 1; i < r4.xs.size(); ++i) {
    const double dx = r4.xs[i] - r4.xs[i - 1];
    const double dy = r4.ys[i] - r4.ys[i - 1];
    s2 += dx * dx + dy * dy;
  }
  const double per_step = s2 / double(r4.steps());
  CHECK(per_step == doctest::Approx(2.0 * r4.h).epsilon(0.1));
  CHECK_THROWS(rescale_path(p, 0.0));
}

TEST_CASE("alpha scaling identity is pathwise exact on matched grids") {
  const BrownPath base = simulate_bm(1e-3, 1.0, 43, 0);
  const BrownPath scaled = rescale_path(base, 4.0);
  for (int l : {2, 3}) {
    const double eps = 8.0 * scaled.h;
    const double lhs = alpha_k_eps(scaled, l, eps, 0.25);
    const double rhs = alpha_k_eps(base, l, 4.0 * eps, 1.0) / 4.0;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("rescaling prediction: identities at r=1 and k=1") {
  CHECK(rescale_gamma({0.42}, 1.0, 1) == doctest::Approx(0.42));
  // k = 1: hat-gamma_1(rt) = rt, prediction r^-1 * rt = t.
  CHECK(rescale_gamma({0.8}, 4.0, 1) == doctest::Approx(0.2));
  const std::vector<double> v{1.0, -0.3};
  const double br = std::log(1.0 / 4.0) / kTwoPi;
  CHECK(rescale_gamma(v, 4.0, 2) == doctest::Approx((v[1] + br * v[0]) / 4.0).epsilon(1e-14));
}

TEST_CASE("two-route rescaling agreement on a few paths") {
  const double h = 2e-4;
  const double r = 4.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const BrownPath base = simulate_bm(h, 1.0, 47, s);
    const BrownPath scaled = rescale_path(base, r);
    const GammaResult direct =
        gamma_k(scaled, 2, 0.25, {16 * scaled.h, 8 * scaled.h, 4 * scaled.h});
    const GammaResult on_base = gamma_k(base, 2, 1.0, {16 * h, 8 * h, 4 * h});
    const double predicted = rescale_gamma({1.0, on_base.value()}, r, 2);
    const double tol = 2.0 * (direct.extrapolation.last_gap +
                              on_base.extrapolation.last_gap) +
                       5e-3;
    CHECK(std::fabs(direct.value() - predicted) <= tol);
  }
}

TEST_CASE("offset order-two quantities") {
  const BrownPath p = simulate_bm(1e-3, 1.0, 53, 0);
  const double eps = 8e-3;
  // Zero offset reduces to the plain pair integral.
  const double plain = alpha_k_eps(p, 2, eps, 1.0);
  CHECK(alpha_bar_2(p, eps, 1.0, 0.0, 0.0) == doctest::Approx(plain).epsilon(1e-12));
  // Far offsets see nothing.
  CHECK(alpha_bar_2(p, eps, 1.0, 50.0, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  // gamma-bar subtracts u1(x) t.
  const double x = 0.4;
  CHECK(gamma_bar_2(p, eps, 1.0, x, 0.0) ==
        doctest::Approx(alpha_bar_2(p, eps, 1.0, x, 0.0) - u_one(x, 0.0)).epsilon(1e-12));
}

TEST_CASE("mean of alpha_2 at moderate resolution matches the closed form") {
  // E alpha_{2,eps}(1) = ((1+eps) log((1+eps)/eps) - 1) / 2pi.
  const double h = 1e-3, eps = 16e-3;
  const int paths = 400;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < paths; ++i) {
    const BrownPath p = simulate_bm(h, 1.0, 59, std::uint64_t(i));
    const double a = alpha_2_grid(p, eps, 1.0);
    sum += a;
    sumsq += a * a;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sumsq / paths - mean * mean) / paths);
  const double target = ((1.0 + eps) * std::log((1.0 + eps) / eps) - 1.0) / kTwoPi;
  CHECK(std::fabs(mean - target) < 3.0 * se);
}

TEST_CASE("gamma_2 mean over many paths matches the derived constant") {
  const double h = 1e-3;
  const std::vector<double> eps{16 * h, 8 * h, 4 * h};
  const int paths = 400;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < paths; ++i) {
    const BrownPath p = simulate_bm(h, 1.0, 61, std::uint64_t(i));
    const double g = gamma_k(p, 2, 1.0, eps).value();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / paths;
  const double se = std::sqrt((sumsq / paths - mean * mean) / paths);
  const double target = (kEulerGamma - 1.0) / kTwoPi;
  CHECK(std::fabs(mean - target) < 3.0 * se);
}

TEST_CASE("time continuity: mean square increment of gamma_2 shrinks with the gap") {
  const double h = 5e-4;
  const std::vector<double> eps{16 * h, 8 * h, 4 * h};
  const int paths = 200;
  const double t0 = 0.5;
  std::vector<double> stat;
  for (double delta : {0.1, 0.05, 0.025}) {
    double acc = 0.0;
    for (int i = 0; i < paths; ++i) {
      const BrownPath p = simulate_bm(h, 1.0, 67, std::uint64_t(i));
      const double a = gamma_k(p, 2, t0, eps).value();
      const double b = gamma_k(p, 2, t0 + delta, eps).value();
      acc += (b - a) * (b - a);
    }
    stat.push_back(acc / paths);
  }
  CHECK(stat[0] > stat[1]);
  CHECK(stat[1] > stat[2]);
}
