#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "rangekit/specfun.hpp"
#include "rangekit/step_law.hpp"

using namespace rangekit;

TEST_CASE("reference law validates with identity covariance") {
  const StepLaw law = reference_walk_law();
  CHECK(law.entries().size() == 12);
  double sum = 0.0;
  for (const auto& e : law.entries()) sum += e.prob;
  CHECK(std::fabs(sum - 1.0) < 1e-12);
  CHECK(std::fabs(law.cov_xx() - 1.0) < 1e-12);
  CHECK(std::fabs(law.cov_yy() - 1.0) < 1e-12);
  CHECK(std::fabs(law.cov_xy()) < 1e-12);
  CHECK(law.max_step() == 2);
}

TEST_CASE("characteristic function values of the reference law") {
  const StepLaw law = reference_walk_law();
  CHECK(law.char_fn(0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // 0.4*cos(pi)cos(pi) + 0.2(cos pi + cos pi) + 0.1(cos 2pi + cos 2pi)
  CHECK(law.char_fn(kPi, kPi) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(law.char_fn(0.0, kPi) == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("char_fn agrees with the complex-exponential reference") {
  const StepLaw law = reference_walk_law();
  RngStream rng(11, 0);
  for (int i = 0; i < 100; ++i) {
    const double px = (2.0 * rng.uniform() - 1.0) * kPi;
    const double py = (2.0 * rng.uniform() - 1.0) * kPi;
    std::complex<double> ref = 0.0;
    for (const auto& e : law.entries())
      ref += e.prob * std::exp(std::complex<double>(0.0, px * e.step.x + py * e.step.y));
    CHECK(std::fabs(ref.imag()) < 1e-14);
    CHECK(law.char_fn(px, py) == doctest::Approx(ref.real()).epsilon(1e-14));
    CHECK(law.char_fn(px, py) == doctest::Approx(law.char_fn(-px, -py)).epsilon(1e-14));
    // Stable forms agree with the direct ones away from 0.
    CHECK(law.one_minus_char_fn(px, py) ==
          doctest::Approx(1.0 - law.char_fn(px, py)).epsilon(1e-12));
  }
}

TEST_CASE("diagonal walk is rejected as periodic at (pi,pi)") {
  const auto entries = diagonal_walk_entries();
  const auto report = StepLaw::validate(entries);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.kind == LawViolation::NotStronglyAperiodic) found = true;
  CHECK(found);
  CHECK_THROWS_AS(StepLaw::make(entries), StepLawError);
}

TEST_CASE("nearest neighbor walk reports covariance I/2") {
  const auto report = StepLaw::validate(nearest_neighbor_entries());
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& v : report.violations)
    if (v.kind == LawViolation::CovarianceNotIdentity) {
      found = true;
      CHECK(v.detail.find("0.5") != std::string::npos);
    }
  CHECK(found);
}

TEST_CASE("probability sum violations are reported") {
  auto entries = reference_walk_entries();
  entries.pop_back();
  const auto report = StepLaw::validate(entries);
  bool prob = false, sym = false;
  for (const auto& v : report.violations) {
    if (v.kind == LawViolation::ProbsDontSum) prob = true;
    if (v.kind == LawViolation::NotSymmetric) sym = true;
  }
  CHECK(prob);
  CHECK(sym);  // dropped (0,-2) breaks the mirror of (0,2)
}

TEST_CASE("grid aperiodicity certificate") {
  const StepLaw law = reference_walk_law();
  const auto fine = check_strong_aperiodicity(law, 512);
  const auto coarse = check_strong_aperiodicity(law, 64);
  CHECK(fine.ok);
  CHECK(coarse.ok);
  CHECK(fine.max_phi < 1.0 - fine.margin);

  // The pure diagonal walk hits |phi| = 1 at (pi,pi); bypass make() to get
  // a law object for the grid check alone.
  // (cannot construct it through make(), so check via the raw entries)
  const auto entries = diagonal_walk_entries();
  double phi = 0.0;
  for (const auto& e : entries) phi += e.prob * std::cos(kPi * (e.step.x + e.step.y));
  CHECK(phi == doctest::Approx(1.0));
}

TEST_CASE("sampling matches the table and is deterministic") {
  const StepLaw law = reference_walk_law();
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(law.sample_step(a) == law.sample_step(b));

  RngStream rng(42, 8);
  const int n = 1000000;
  SiteMap<std::int64_t> counts;
  double mx = 0, my = 0, cxx = 0, cyy = 0, cxy = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2i s = law.sample_step(rng);
    ++counts[s];
    mx += s.x;
    my += s.y;
    cxx += double(s.x) * s.x;
    cyy += double(s.y) * s.y;
    cxy += double(s.x) * s.y;
  }
  // Empirical frequencies within 4 standard errors.
  for (const auto& e : law.entries()) {
    const double se = std::sqrt(e.prob * (1 - e.prob) / n);
    const double freq = double(*counts.find(e.step)) / n;
    CHECK(std::fabs(freq - e.prob) < 4.0 * se);
  }
  // Mean within 4 se of zero; covariance within 4 se of the identity.
  CHECK(std::fabs(mx / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::fabs(my / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::fabs(cxx / n - 1.0) < 4.0 * 1.5 / std::sqrt(double(n)));
  CHECK(std::fabs(cyy / n - 1.0) < 4.0 * 1.5 / std::sqrt(double(n)));
  CHECK(std::fabs(cxy / n) < 4.0 * 1.5 / std::sqrt(double(n)));
}

TEST_CASE("law text round trip and parse errors") {
  const StepLaw law = reference_walk_law();
  std::istringstream in(law.to_text());
  const StepLaw back = parse_step_law(in);
  CHECK(back.entries().size() == law.entries().size());
  CHECK(back.char_fn(1.0, 0.5) == doctest::Approx(law.char_fn(1.0, 0.5)).epsilon(1e-15));

  std::istringstream bad("1 0 1\n");
  CHECK_THROWS(parse_step_law(bad));
  std::istringstream negden("1 0 1 -2\n");
  CHECK_THROWS(parse_step_law(negden));
}

TEST_CASE("moment metadata is recorded") {
  const StepLaw law = reference_walk_law();
  CHECK(law.moment_p() == doctest::Approx(4.0));
  CHECK(law.moment_value() > 0.0);
  CHECK_THROWS_AS(StepLaw::make(reference_walk_entries(), 2.0), StepLawError);
}
