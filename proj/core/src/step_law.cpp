#include "rangekit/step_law.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

#include "rangekit/specfun.hpp"

namespace rangekit {

namespace mp = boost::multiprecision;

std::string LawValidation::message() const {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    s += v.detail;
  }
  return s;
}

StepLawError::StepLawError(std::string what, LawValidation rep)
    : std::runtime_error(std::move(what)), report(std::move(rep)) {}

namespace {

const char* kind_name(LawViolation::Kind k) {
  switch (k) {
    case LawViolation::ProbsDontSum: return "ProbsDontSum";
    case LawViolation::NotSymmetric: return "NotSymmetric";
    case LawViolation::CovarianceNotIdentity: return "CovarianceNotIdentity";
    case LawViolation::NotStronglyAperiodic: return "NotStronglyAperiodic";
    case LawViolation::BadEntry: return "BadEntry";
  }
  return "?";
}

void add(LawValidation& r, LawViolation::Kind k, const std::string& detail) {
  r.violations.push_back({k, std::string(kind_name(k)) + ": " + detail});
}

// Index of the subgroup of Z^2 generated by the support: gcd of all 2x2
// minors (Smith normal form d1*d2), with d1 the gcd of all entries.
long long lattice_index(const std::vector<WeightedStep>& es) {
  long long minors = 0;
  for (std::size_t i = 0; i < es.size(); ++i)
    for (std::size_t j = i + 1; j < es.size(); ++j) {
      const long long d = (long long)es[i].step.x * es[j].step.y -
                          (long long)es[i].step.y * es[j].step.x;
      minors = std::gcd(minors, std::llabs(d));
    }
  return minors;  // 0 when rank < 2
}

}  // namespace

LawValidation StepLaw::validate(const std::vector<WeightedStep>& entries) {
  LawValidation r;
  if (entries.empty()) {
    add(r, LawViolation::BadEntry, "empty support");
    return r;
  }

  bool exact = true;
  for (const auto& e : entries) {
    if (!(e.prob > 0.0))
      add(r, LawViolation::BadEntry, "non-positive probability at (" +
              std::to_string(e.step.x) + "," + std::to_string(e.step.y) + ")");
    if (e.den <= 0 || e.num <= 0) exact = false;
    if (e.step.x == 0 && e.step.y == 0)
      add(r, LawViolation::BadEntry, "support contains the zero step");
  }
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (std::size_t j = i + 1; j < entries.size(); ++j)
      if (entries[i].step == entries[j].step)
        add(r, LawViolation::BadEntry, "duplicate support point");
  if (!r.violations.empty()) return r;

  // Probability sum: exact when rationals are supplied.
  if (exact) {
    mp::cpp_rational sum = 0;
    for (const auto& e : entries) sum += mp::cpp_rational(e.num, e.den);
    if (sum != 1)
      add(r, LawViolation::ProbsDontSum,
          "rational probabilities sum to " + sum.str() + ", not 1");
  } else {
    double sum = 0.0;
    for (const auto& e : entries) sum += e.prob;
    if (std::fabs(sum - 1.0) > 1e-12)
      add(r, LawViolation::ProbsDontSum,
          "probabilities sum to " + std::to_string(sum));
  }

  // Symmetry: for every (v, p) the point (-v) must carry equal probability.
  for (const auto& e : entries) {
    const auto m = std::find_if(entries.begin(), entries.end(), [&](const WeightedStep& o) {
      return o.step == -e.step;
    });
    if (m == entries.end() || std::fabs(m->prob - e.prob) > 1e-15) {
      add(r, LawViolation::NotSymmetric, "no matching mass at (" +
              std::to_string(-e.step.x) + "," + std::to_string(-e.step.y) + ")");
      break;
    }
  }

  // Covariance = identity within 1e-12 (entries are typically rational, so
  // the tolerance only absorbs accumulation error).
  double cxx = 0, cyy = 0, cxy = 0;
  for (const auto& e : entries) {
    cxx += e.prob * e.step.x * e.step.x;
    cyy += e.prob * e.step.y * e.step.y;
    cxy += e.prob * e.step.x * e.step.y;
  }
  if (std::fabs(cxx - 1.0) > 1e-12 || std::fabs(cyy - 1.0) > 1e-12 ||
      std::fabs(cxy) > 1e-12) {
    std::ostringstream os;
    os << "covariance [[" << cxx << "," << cxy << "],[" << cxy << "," << cyy << "]]";
    add(r, LawViolation::CovarianceNotIdentity, os.str());
  }

  // Strong aperiodicity, structural part: support generates Z^2 and holds
  // vectors of both coordinate-sum parities (rules out sublattice traps
  // such as the pure diagonal walk).
  const long long index = lattice_index(entries);
  bool odd = false, even = false;
  for (const auto& e : entries) ((e.step.x + e.step.y) % 2 != 0 ? odd : even) = true;
  if (index != 1 || !odd || !even) {
    std::ostringstream os;
    os << "structural check failed (lattice index " << index << ", parities "
       << (odd ? "odd" : "") << (even ? " even" : "") << ")";
    add(r, LawViolation::NotStronglyAperiodic, os.str());
  }
  return r;
}

StepLaw StepLaw::make(std::vector<WeightedStep> entries, double moment_p) {
  if (!(moment_p > 2.0)) {
    LawValidation r;
    add(r, LawViolation::BadEntry, "moment order must exceed 2");
    throw StepLawError(r.message(), r);
  }
  LawValidation r = validate(entries);
  StepLaw law;
  law.entries_ = std::move(entries);
  law.moment_p_ = moment_p;
  for (const auto& e : law.entries_) {
    law.cov_[0] += e.prob * e.step.x * e.step.x;
    law.cov_[1] += e.prob * e.step.y * e.step.y;
    law.cov_[2] += e.prob * e.step.x * e.step.y;
    law.moment_value_ +=
        e.prob * std::pow(std::hypot(double(e.step.x), double(e.step.y)), moment_p);
    law.max_step_ = std::max({law.max_step_, std::abs(e.step.x), std::abs(e.step.y)});
  }
  if (r.ok()) {
    // Grid certificate on top of the structural one.
    law.build_alias();
    const AperiodicityCheck ap = check_strong_aperiodicity(law);
    if (!ap.ok) {
      std::ostringstream os;
      os << "grid check: phi = " << ap.max_phi << " at p = (" << ap.worst_p[0]
         << "," << ap.worst_p[1] << "), margin " << ap.margin;
      add(r, LawViolation::NotStronglyAperiodic, os.str());
    }
  }
  if (!r.ok()) throw StepLawError("invalid step law: " + r.message(), r);
  return law;
}

double StepLaw::char_fn(double px, double py) const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.prob * std::cos(px * e.step.x + py * e.step.y);
  return s;
}

double StepLaw::one_minus_char_fn(double px, double py) const {
  double s = 0.0;
  for (const auto& e : entries_) {
    const double half = 0.5 * (px * e.step.x + py * e.step.y);
    const double sh = std::sin(half);
    s += e.prob * 2.0 * sh * sh;
  }
  return s;
}

double StepLaw::char_fn_quartic_rem(double px, double py) const {
  // cos z - 1 + z^2/2 summed against the law; the z^2 terms assemble to
  // |p|^2/2 because the covariance is the identity. Series below |z| = 0.5
  // avoids the catastrophic cancellation of the direct form.
  double s = 0.0;
  for (const auto& e : entries_) {
    const double z = px * e.step.x + py * e.step.y;
    const double z2 = z * z;
    if (std::fabs(z) < 0.5) {
      const double z4 = z2 * z2;
      s += e.prob * (z4 / 24.0 - z4 * z2 / 720.0 + z4 * z4 / 40320.0 -
                     z4 * z4 * z2 / 3628800.0);
    } else {
      s += e.prob * (std::cos(z) - 1.0 + z2 / 2.0);
    }
  }
  return s;
}

void StepLaw::build_alias() {
  // Walker/Vose alias construction.
  const std::size_t n = entries_.size();
  alias_accept_.assign(n, 1.0);
  alias_index_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = entries_[i].prob * double(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    alias_accept_[s] = scaled[s];
    alias_index_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (auto i : large) alias_accept_[i] = 1.0;
  for (auto i : small) alias_accept_[i] = 1.0;
}

Vec2i StepLaw::sample_step(RngStream& rng) const {
  const std::size_t i = std::size_t(rng.below(entries_.size()));
  const double u = rng.uniform();
  const std::size_t j = (u < alias_accept_[i]) ? i : alias_index_[i];
  return entries_[j].step;
}

std::string StepLaw::to_text() const {
  std::ostringstream os;
  os << "# dx dy numerator denominator\n";
  for (const auto& e : entries_) {
    if (e.den > 0)
      os << e.step.x << ' ' << e.step.y << ' ' << e.num << ' ' << e.den << '\n';
    else
      os << e.step.x << ' ' << e.step.y << ' ' << e.prob << " 0\n";
  }
  return os.str();
}

AperiodicityCheck check_strong_aperiodicity(const StepLaw& law, int grid_n) {
  if (grid_n < 64) throw std::invalid_argument("check_strong_aperiodicity: grid_n >= 64");
  AperiodicityCheck out;
  // Spitzer's condition: |phi(p)| = 1 only at p in 2 pi Z^2. The excluded
  // disc shrinks with the grid; under identity covariance phi <= 1 - |p|^2/2
  // + O(|p|^4) near 0, so points just outside radius r_ex clear the margin
  // r_ex^2/4 with room to spare, independent of grid_n.
  const double r_ex = 8.0 * kPi / grid_n;
  out.margin = r_ex * r_ex / 4.0;
  out.max_phi = -1.0;
  for (int i = 0; i < grid_n; ++i) {
    const double px = -kPi + kTwoPi * i / grid_n;
    for (int j = 0; j < grid_n; ++j) {
      const double py = -kPi + kTwoPi * j / grid_n;
      if (px * px + py * py < r_ex * r_ex) continue;
      const double phi = std::fabs(law.char_fn(px, py));
      if (phi > out.max_phi) {
        out.max_phi = phi;
        out.worst_p = {px, py};
      }
    }
  }
  const long long index = lattice_index(law.entries());
  bool odd = false, even = false;
  for (const auto& e : law.entries()) ((e.step.x + e.step.y) % 2 != 0 ? odd : even) = true;
  out.structural_ok = (index == 1 && odd && even);
  out.ok = out.structural_ok && out.max_phi < 1.0 - out.margin;
  return out;
}

StepLaw parse_step_law(std::istream& in, double moment_p) {
  std::vector<WeightedStep> es;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long dx, dy, num, den;
    if (!(ls >> dx)) continue;  // blank
    if (!(ls >> dy >> num >> den) || den <= 0 || num <= 0)
      throw std::runtime_error("step law parse error at line " + std::to_string(lineno));
    WeightedStep e;
    e.step = {std::int32_t(dx), std::int32_t(dy)};
    e.num = num;
    e.den = den;
    e.prob = double(num) / double(den);
    es.push_back(e);
  }
  return StepLaw::make(std::move(es), moment_p);
}

StepLaw load_step_law(const std::string& path, double moment_p) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open step law file: " + path);
  return parse_step_law(f, moment_p);
}

std::vector<WeightedStep> reference_walk_entries() {
  std::vector<WeightedStep> es;
  auto put = [&](int x, int y, long long num, long long den) {
    es.push_back({{x, y}, double(num) / double(den), num, den});
  };
  for (int sx : {1, -1})
    for (int sy : {1, -1}) put(sx, sy, 1, 10);
  put(1, 0, 1, 10);
  put(-1, 0, 1, 10);
  put(0, 1, 1, 10);
  put(0, -1, 1, 10);
  put(2, 0, 1, 20);
  put(-2, 0, 1, 20);
  put(0, 2, 1, 20);
  put(0, -2, 1, 20);
  return es;
}

StepLaw reference_walk_law() {
  static const StepLaw law = StepLaw::make(reference_walk_entries());
  return law;
}

std::vector<WeightedStep> diagonal_walk_entries() {
  std::vector<WeightedStep> es;
  for (int sx : {1, -1})
    for (int sy : {1, -1}) es.push_back({{sx, sy}, 0.25, 1, 4});
  return es;
}

std::vector<WeightedStep> nearest_neighbor_entries() {
  std::vector<WeightedStep> es;
  es.push_back({{1, 0}, 0.25, 1, 4});
  es.push_back({{-1, 0}, 0.25, 1, 4});
  es.push_back({{0, 1}, 0.25, 1, 4});
  es.push_back({{0, -1}, 0.25, 1, 4});
  return es;
}

}  // namespace rangekit
