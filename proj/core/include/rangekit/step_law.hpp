#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "rangekit/lattice.hpp"
#include "rangekit/rng.hpp"

namespace rangekit {

/// One support point of a step distribution. The probability is kept both
/// as an exact rational (num/den) and as its double value; file-loaded laws
/// carry the exact form, programmatic ones may set num = den = 0.
struct WeightedStep {
  Vec2i step;
  double prob = 0.0;
  long long num = 0;
  long long den = 0;
};

struct LawViolation {
  enum Kind {
    ProbsDontSum,
    NotSymmetric,
    CovarianceNotIdentity,
    NotStronglyAperiodic,
    BadEntry,
  };
  Kind kind;
  std::string detail;
};

struct LawValidation {
  std::vector<LawViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string message() const;
};

class StepLawError : public std::runtime_error {
 public:
  StepLawError(std::string what, LawValidation report);
  const LawValidation report;
};

struct AperiodicityCheck {
  bool ok = false;
  double max_phi = 0.0;    // max of phi over the grid minus the excluded disc
  double margin = 0.0;     // verdict requires max_phi < 1 - margin
  std::array<double, 2> worst_p{0.0, 0.0};
  bool structural_ok = false;  // support generates Z^2 and has both parities
};

/// A finitely supported symmetric step distribution on Z^2 with identity
/// covariance, validated at construction. Immutable and safe to share
/// across threads; sampling takes a caller-owned RngStream.
class StepLaw {
 public:
  /// Validates and builds. Throws StepLawError carrying every violated
  /// hypothesis (probability sum, symmetry, covariance, aperiodicity).
  static StepLaw make(std::vector<WeightedStep> entries, double moment_p = 4.0);

  /// Non-throwing hypothesis check on raw entries.
  static LawValidation validate(const std::vector<WeightedStep>& entries);

  const std::vector<WeightedStep>& entries() const { return entries_; }
  double moment_p() const { return moment_p_; }
  double moment_value() const { return moment_value_; }  // E|X|^moment_p
  int max_step() const { return max_step_; }             // max coordinate magnitude

  /// Covariance matrix entries (should be 1,1,0 within 1e-12).
  double cov_xx() const { return cov_[0]; }
  double cov_yy() const { return cov_[1]; }
  double cov_xy() const { return cov_[2]; }

  /// phi(p) = sum_v prob(v) cos(p.v); real by symmetry.
  double char_fn(double px, double py) const;

  /// 1 - phi(p) = sum_v prob(v) * 2 sin^2(p.v/2), stable near p = 0.
  double one_minus_char_fn(double px, double py) const;

  /// phi(p) - 1 + |p|^2/2 = sum_v prob(v) (cos(p.v) - 1 + (p.v)^2/2),
  /// stable near p = 0 (uses identity covariance).
  double char_fn_quartic_rem(double px, double py) const;

  Vec2i sample_step(RngStream& rng) const;

  std::string to_text() const;

 private:
  StepLaw() = default;
  void build_alias();

  std::vector<WeightedStep> entries_;
  double moment_p_ = 0.0;
  double moment_value_ = 0.0;
  std::array<double, 3> cov_{0, 0, 0};
  int max_step_ = 0;
  // Walker alias table
  std::vector<double> alias_accept_;
  std::vector<std::uint32_t> alias_index_;
};

/// Grid certificate for strong aperiodicity: max phi over an n x n grid on
/// [-pi,pi]^2 minus a disc of radius ~0.1 around 0; the verdict demands
/// max_phi < 1 - margin with margin = r_ex^2/4 (phi <= 1 - |p|^2/2 + O(p^4)
/// near 0 under identity covariance, so honest laws clear this easily while
/// any law with phi = 1 off the origin fails at the grid point hitting it).
AperiodicityCheck check_strong_aperiodicity(const StepLaw& law, int grid_n = 256);

/// Text format: one support point per line, "dx dy numerator denominator",
/// '#' starts a comment. Probabilities are exact rationals.
StepLaw parse_step_law(std::istream& in, double moment_p = 4.0);
StepLaw load_step_law(const std::string& path, double moment_p = 4.0);

/// The repository's canonical test law: 1/10 on (+-1,+-1) and on
/// (+-1,0),(0,+-1); 1/20 on (+-2,0),(0,+-2). Symmetric, covariance exactly
/// the identity, all moments finite, strongly aperiodic.
StepLaw reference_walk_law();
std::vector<WeightedStep> reference_walk_entries();

/// Test fixtures that violate one hypothesis each.
std::vector<WeightedStep> diagonal_walk_entries();          // periodic at (pi,pi)
std::vector<WeightedStep> nearest_neighbor_entries();       // covariance I/2

}  // namespace rangekit
