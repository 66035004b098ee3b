#include <doctest.h>

#include <cmath>

#include "rangekit/coupling.hpp"
#include "rangekit/stats.hpp"

using namespace rangekit;

TEST_CASE("block pmf: exact convolution and moments") {
  const StepLaw law = reference_walk_law();
  const LatticePmf one = walk_block_pmf(law, 1);
  for (const auto& e : law.entries())
    CHECK(one.at(e.step.x, e.step.y) == doctest::Approx(e.prob).epsilon(1e-14));

  const LatticePmf two = walk_block_pmf(law, 2);
  // Hand value: P(S_2 = (2,2)) = (1,1)+(1,1) or (2,0)+(0,2) in either
  // order = 0.1^2 + 2 * 0.05^2 = 0.015.
  CHECK(two.at(2, 2) == doctest::Approx(0.015).epsilon(1e-12));
  double total = 0.0, var_x = 0.0;
  for (int x = -two.radius; x <= two.radius; ++x)
    for (int y = -two.radius; y <= two.radius; ++y) {
      total += two.at(x, y);
      var_x += two.at(x, y) * double(x) * x;
    }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(var_x == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("discretized gaussian: normalization, symmetry, variance") {
  const LatticePmf g = gaussian_block_pmf(16.0);
  double total = 0.0, var = 0.0, mean = 0.0;
  for (int x = -g.radius; x <= g.radius; ++x)
    for (int y = -g.radius; y <= g.radius; ++y) {
      total += g.at(x, y);
      mean += g.at(x, y) * x;
      var += g.at(x, y) * double(x) * x;
    }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(mean) < 1e-12);
  // Rounding a N(0, B) adds the lattice quantization variance ~1/12.
  CHECK(var == doctest::Approx(16.0 + 1.0 / 12.0).epsilon(0.01));
  CHECK(g.at(3, 5) == doctest::Approx(g.at(-3, -5)).epsilon(1e-14));
}

TEST_CASE("single-step coupler: feasibility and exact marginals") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c = BlockCoupler::build(law, 1);
  CHECK(c.transport_cost() >= 0.0);
  CHECK(c.marginal_defect_walk() <= 1e-9);
  CHECK(c.marginal_defect_gauss() <= 1e-9);

  // Sampling reproduces the walk marginal (it is drawn exactly) and hits
  // the Gaussian marginal within GOF noise.
  RngStream rng(17, 0);
  const int draws = 20000;
  const int side = 2 * c.walk_marginal().radius + 1;
  std::vector<double> wobs(std::size_t(side) * std::size_t(side), 0.0);
  std::vector<double> gobs(wobs.size(), 0.0);
  for (int i = 0; i < draws; ++i) {
    const auto [x, y] = c.sample_block(rng);
    const int r = c.walk_marginal().radius;
    wobs[std::size_t(x.x + r) * std::size_t(side) + std::size_t(x.y + r)] += 1;
    gobs[std::size_t(y.x + r) * std::size_t(side) + std::size_t(y.y + r)] += 1;
  }
  CHECK(chi_square_gof(wobs, c.walk_marginal().p).p_value > 1e-3);
  CHECK(chi_square_gof(gobs, c.gauss_marginal().p).p_value > 1e-3);
}

TEST_CASE("per-step displacement shrinks with block size") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c1 = BlockCoupler::build(law, 1);
  const BlockCoupler c16 = BlockCoupler::build(law, 16);
  CHECK(c16.transport_cost() / 16.0 < c1.transport_cost());
}

TEST_CASE("walk bridge: block sums match exactly, both routes") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c = BlockCoupler::build(law, 16);
  RngStream rng(23, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const auto [x, y] = c.sample_block(rng);
    std::vector<Vec2i> steps;
    c.refine_walk_block(x, rng, steps);
    CHECK(steps.size() == 16);
    Vec2i sum{0, 0};
    for (const auto& s : steps) sum = sum + s;
    CHECK(sum == x);
    std::vector<std::pair<double, double>> incs;
    c.refine_gauss_block(y, rng, incs);
    double sx = 0.0, sy = 0.0;
    for (const auto& [ix, iy] : incs) {
      sx += ix;
      sy += iy;
    }
    CHECK(sx == doctest::Approx(double(y.x)).epsilon(1e-12));
    CHECK(sy == doctest::Approx(double(y.y)).epsilon(1e-12));
  }
}

TEST_CASE("refined walk increments still follow the step law") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c = BlockCoupler::build(law, 16);
  RngStream rng(29, 0);
  SiteMap<std::int64_t> counts;
  const int blocks = 20000;  // 320k refined steps
  std::vector<Vec2i> steps;
  for (int b = 0; b < blocks; ++b) {
    const auto [x, y] = c.sample_block(rng);
    (void)y;
    steps.clear();
    c.refine_walk_block(x, rng, steps);
    for (const auto& s : steps) ++counts[s];
  }
  const double n = 16.0 * blocks;
  for (const auto& e : law.entries()) {
    const double freq = double(*counts.find(e.step)) / n;
    const double se = std::sqrt(e.prob * (1 - e.prob) / n);
    CHECK(std::fabs(freq - e.prob) < 5.0 * se);
  }
}

TEST_CASE("coupled sampling is reproducible") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c = BlockCoupler::build(law, 1);
  RngStream a(31, 5), b(31, 5);
  for (int i = 0; i < 200; ++i) {
    const auto pa = c.sample_block(a);
    const auto pb = c.sample_block(b);
    CHECK(pa.first == pb.first);
    CHECK(pa.second == pb.second);
  }
}

TEST_CASE("error statistics: monotone running maximum and diffusive exponent at B=1") {
  const StepLaw law = reference_walk_law();
  const BlockCoupler c = BlockCoupler::build(law, 1);
  const CouplingErrorStats stats =
      coupling_error_stats(c, {64, 128, 256, 512, 1024}, 200, 37);
  for (std::size_t i = 1; i < stats.d_rms.size(); ++i)
    CHECK(stats.d_rms[i] >= stats.d_rms[i - 1]);
  // Independent per-step errors accumulate diffusively.
  CHECK(std::fabs(stats.exponent.slope - 0.5) < 0.1);
  CHECK_THROWS(coupling_error_stats(c, {100, 50}, 10, 1));
}
