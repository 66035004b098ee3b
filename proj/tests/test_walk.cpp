#include <doctest.h>

#include <cmath>

#include "rangekit/walk.hpp"

using namespace rangekit;

namespace {

// Direct centered-product form of the renormalized intersection count:
// sum over nondecreasing k-tuples of prod_j (delta(S_{i_{j-1}},S_{i_j}) -
// g delta(i_{j-1},i_j)), evaluated in exact rational arithmetic.
BigRational renorm_product_brute(const WalkSample& w, std::int64_t n, int k,
                                 const BigRational& g) {
  BigRational total = 0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, int depth, std::int64_t lo, BigRational prod) -> void {
    if (depth == k) {
      total += prod;
      return;
    }
    for (std::int64_t i = lo; i < n; ++i) {
      idx[std::size_t(depth)] = i;
      if (depth == 0) {
        self(self, 1, i, prod);
        continue;
      }
      const std::int64_t prev = idx[std::size_t(depth - 1)];
      BigRational factor =
          (w.positions[std::size_t(i)] == w.positions[std::size_t(prev)]) ? 1 : 0;
      if (i == prev) factor -= g;
      if (factor != 0) self(self, depth + 1, i, prod * factor);
    }
  };
  rec(rec, 0, 0, BigRational(1));
  return total;
}

}  // namespace

TEST_CASE("simulate_walk basics") {
  const StepLaw law = reference_walk_law();
  const WalkSample zero = simulate_walk(law, 0, 1);
  CHECK(zero.positions.size() == 1);
  CHECK(zero.positions[0] == Vec2i{0, 0});

  const WalkSample a = simulate_walk(law, 500, 9, 3);
  const WalkSample b = simulate_walk(law, 500, 9, 3);
  CHECK(a.positions == b.positions);
  for (std::size_t i = 1; i < a.positions.size(); ++i) {
    const Vec2i d = a.positions[i] - a.positions[i - 1];
    bool in_support = false;
    for (const auto& e : law.entries())
      if (e.step == d) in_support = true;
    CHECK(in_support);
  }
}

TEST_CASE("diffusive normalization E|S_n|^2 / n = 2") {
  const StepLaw law = reference_walk_law();
  const std::int64_t n = 1000;
  const int replicas = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < replicas; ++r) {
    const WalkSample w = simulate_walk(law, n, 77, std::uint64_t(r));
    const Vec2i p = w.positions.back();
    const double v = (double(p.x) * p.x + double(p.y) * p.y) / double(n);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / replicas;
  const double se = std::sqrt((sumsq / replicas - mean * mean) / replicas);
  CHECK(std::fabs(mean - 2.0) < 4.0 * se);
}

TEST_CASE("range counting and monotonicity") {
  const StepLaw law = reference_walk_law();
  for (std::uint64_t s = 0; s < 20; ++s) {
    const WalkSample w = simulate_walk(law, 200, 5, s);
    std::int64_t prev = 0;
    for (std::int64_t n = 1; n <= 200; n += 17) {
      const std::int64_t r = range_size(w, n);
      CHECK(r >= prev);
      CHECK(r <= n);
      prev = r;
    }
  }
}

TEST_CASE("streaming checkpoints match the path-based count") {
  const StepLaw law = reference_walk_law();
  const std::vector<std::int64_t> ns{10, 100, 1000, 5000};
  const auto stream = range_checkpoints(law, ns, 123, 4);
  // The streaming path must reproduce simulate_walk on the same stream.
  const WalkSample w = simulate_walk(law, 5000, 123, 4);
  for (std::size_t i = 0; i < ns.size(); ++i)
    CHECK(stream[i] == range_size(w, ns[i]));
}

TEST_CASE("occupation partitions time and counts distinct sites") {
  const StepLaw law = reference_walk_law();
  const WalkSample w = simulate_walk(law, 300, 21, 0);
  const OccupationMap occ(w, 300, true);
  CHECK(occ.total() == 300);
  SiteSet sites;
  std::int64_t distinct = 0;
  for (std::int64_t i = 0; i < 300; ++i)
    if (sites.insert(w.positions[std::size_t(i)])) ++distinct;
  CHECK(occ.distinct_sites() == distinct);
  const auto seq = occ.site_sequence();
  for (std::int64_t i = 0; i < 300; ++i) CHECK(seq[std::size_t(i)] == w.positions[std::size_t(i)]);
}

TEST_CASE("intersection counts: hand value and binomial identities") {
  // Path visiting x = (0,0) at times {0,2} and y = (1,1) at time {1}:
  // I_2 = C(3,2) + C(2,2) = 4.
  WalkSample w;
  w.positions = {{0, 0}, {1, 1}, {0, 0}, {5, 5}};
  const OccupationMap occ(w, 3, true);
  CHECK(ilt(occ, 1) == 3);
  CHECK(ilt(occ, 2) == 4);
  CHECK(ilt_brute(w, 3, 2) == 4);

  const StepLaw law = reference_walk_law();
  for (std::uint64_t s = 0; s < 10; ++s) {
    const WalkSample rw = simulate_walk(law, 50, 31, s);
    const OccupationMap ro(rw, 50);
    // I_2 = sum_x l(l+1)/2.
    BigInt direct = 0;
    ro.counts().for_each([&](Vec2i, const std::int64_t& l) {
      direct += BigInt(l) * BigInt(l + 1) / 2;
    });
    CHECK(ilt(ro, 2) == direct);
    CHECK(ilt(ro, 1) == 50);
    // Wide and arbitrary precision agree.
    for (int k = 2; k <= 4; ++k)
      CHECK(BigInt(std::uint64_t(ilt_u128(ro, k))) == ilt(ro, k));
  }
}

TEST_CASE("brute force equivalence on 200 seeded paths") {
  const StepLaw law = reference_walk_law();
  RngStream pick(3, 3);
  for (int rep = 0; rep < 200; ++rep) {
    const std::int64_t n = 3 + std::int64_t(pick.below(8));
    const WalkSample w = simulate_walk(law, n, 1000, std::uint64_t(rep));
    const OccupationMap occ(w, n, true);
    for (int k = 1; k <= 4; ++k) CHECK(ilt(occ, k) == ilt_brute(w, n, k));
  }
  // Single-tuple edge: n = 1 gives 1 for every order.
  const WalkSample w1 = simulate_walk(law, 1, 1, 1);
  for (int k = 1; k <= 4; ++k) CHECK(ilt_brute(w1, 1, k) == 1);
  CHECK_THROWS(ilt_brute(w1, 1, 7));
}

TEST_CASE("renormalized counts: binomial form vs centered products, exact") {
  const StepLaw law = reference_walk_law();
  const BigRational g(BigInt(7), BigInt(5));  // rational counter-term for exactness
  for (std::uint64_t s = 0; s < 25; ++s) {
    const std::int64_t n = 4 + std::int64_t(s % 6);
    const WalkSample w = simulate_walk(law, n, 2000, s);
    const OccupationMap occ(w, n, true);
    const auto i_values = ilt_all(occ, 4);
    for (int k = 1; k <= 4; ++k) {
      const BigRational lhs = renorm_ilt_exact(i_values, k, g);
      const BigRational rhs = renorm_product_brute(w, n, k, g);
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("renormalized counts: double expansion") {
  const std::vector<double> iv{10.0, 40.0, 130.0};
  CHECK(renorm_ilt(iv, 1, 0.7) == doctest::Approx(10.0));
  CHECK(renorm_ilt(iv, 2, 0.7) == doctest::Approx(40.0 - 0.7 * 10.0));
  CHECK(renorm_ilt(iv, 3, 0.7) ==
        doctest::Approx(130.0 - 2.0 * 0.7 * 40.0 + 0.49 * 10.0));
}

TEST_CASE("shifted counts: dynamic program vs enumeration") {
  const StepLaw law = reference_walk_law();
  RngStream pick(5, 5);
  for (int rep = 0; rep < 100; ++rep) {
    const std::int64_t n = 4 + std::int64_t(pick.below(9));  // 4..12
    const WalkSample w = simulate_walk(law, n, 3000, std::uint64_t(rep));
    const OccupationMap occ(w, n, true);
    for (int k = 2; k <= 3; ++k) {
      std::vector<Vec2i> offs;
      for (int j = 0; j < k - 1; ++j)
        offs.push_back({int(pick.below(5)) - 2, int(pick.below(5)) - 2});
      CHECK(shifted_ilt(occ, k, offs) == shifted_ilt_brute(w, n, k, offs));
    }
    // Zero offsets collapse to the plain counts.
    CHECK(shifted_ilt(occ, 2, {Vec2i{0, 0}}) == ilt(occ, 2));
    CHECK(shifted_ilt(occ, 3, {Vec2i{0, 0}, Vec2i{0, 0}}) == ilt(occ, 3));
    // An unrealizable displacement yields zero.
    CHECK(shifted_ilt(occ, 2, {Vec2i{1000, 1000}}) == 0);
  }
}

TEST_CASE("offset renormalization reduces to the plain form at zero offset") {
  const StepLaw law = reference_walk_law();
  const WalkSample w = simulate_walk(law, 40, 17, 2);
  const OccupationMap occ(w, 40, true);
  const double g = 1.234;
  auto green0 = [g](Vec2i) { return g; };  // G(0) = g at zero offsets
  const auto iv = ilt_all(occ, 3);
  std::vector<double> ivd;
  for (const auto& v : iv) ivd.push_back(v.convert_to<double>());
  for (int k = 2; k <= 3; ++k) {
    const std::vector<Vec2i> zeros(std::size_t(k - 1), Vec2i{0, 0});
    CHECK(shifted_renorm_ilt(occ, k, zeros, green0) ==
          doctest::Approx(renorm_ilt(ivd, k, g)).epsilon(1e-12));
  }
}

TEST_CASE("killed horizon: ceiling arithmetic and geometric tail") {
  RngStream rng(99, 0);
  for (int i = 0; i < 1000; ++i) {
    const KilledHorizon h = sample_killed_horizon(0.1, rng);
    CHECK(h.zeta_lambda == std::int64_t(std::ceil(h.zeta / 0.1)));
    CHECK(h.zeta_lambda >= 1);
  }
  // zeta = 0.5, lambda = 0.1 -> horizon 5 (pure arithmetic).
  CHECK(std::int64_t(std::ceil(0.5 / 0.1)) == 5);

  // E zeta_lambda = 1/(1-e^-lambda); P(zeta_lambda > 10) = e^-1 at 0.1.
  const int n = 100000;
  double mean = 0.0;
  int over10 = 0;
  for (int i = 0; i < n; ++i) {
    const KilledHorizon h = sample_killed_horizon(0.1, rng);
    mean += double(h.zeta_lambda);
    if (h.zeta_lambda > 10) ++over10;
  }
  mean /= n;
  const double target = 1.0 / -std::expm1(-0.1);
  CHECK(std::fabs(mean - target) < 4.0 * 10.0 / std::sqrt(double(n)));
  const double p = double(over10) / n;
  const double pe = std::exp(-1.0);
  CHECK(std::fabs(p - pe) < 4.0 * std::sqrt(pe * (1 - pe) / n));
}

TEST_CASE("killed replica statistics are consistent") {
  const StepLaw law = reference_walk_law();
  RngStream rng(4, 4);
  for (int i = 0; i < 50; ++i) {
    RngStream r1(14, std::uint64_t(i)), r2(14, std::uint64_t(i));
    const KilledWalkStats s = killed_walk_replica(law, 0.2, 2, r1);
    // Rebuild the same path and recount.
    const KilledHorizon h = sample_killed_horizon(0.2, r2);
    CHECK(h.zeta_lambda == s.zeta_lambda);
    WalkSample w;
    w.positions.push_back({0, 0});
    Vec2i pos{0, 0};
    for (std::int64_t q = 1; q < h.zeta_lambda; ++q) {
      pos = pos + law.sample_step(r2);
      w.positions.push_back(pos);
    }
    const OccupationMap occ(w, h.zeta_lambda);
    CHECK(occ.distinct_sites() == s.range);
    CHECK(ilt(occ, 2).convert_to<double>() == doctest::Approx(s.i_values[1]));
  }
}
