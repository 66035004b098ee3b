#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rangekit/lattice.hpp"
#include "rangekit/rng.hpp"
#include "rangekit/specfun.hpp"
#include "rangekit/step_law.hpp"

namespace rangekit {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// A realized path S_0 = 0, S_1, ..., S_n together with its seed record.
struct WalkSample {
  std::vector<Vec2i> positions;  // n + 1 points
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t steps() const { return std::int64_t(positions.size()) - 1; }
};

WalkSample simulate_walk(const StepLaw& law, std::int64_t n, std::uint64_t seed,
                         std::uint64_t stream = 0);

/// Cardinality of {S_1, ..., S_n}: S_0 is excluded unless revisited.
std::int64_t range_size(const WalkSample& walk, std::int64_t n);

/// Streaming range counter: no path storage, visited-site set only.
/// Returns |range| at each checkpoint (ascending n values).
std::vector<std::int64_t> range_checkpoints(const StepLaw& law,
                                            const std::vector<std::int64_t>& n_values,
                                            std::uint64_t seed, std::uint64_t stream);

/// Per-site visit counts over time indices 0 <= i < n (S_0 included, S_n
/// excluded; note this offsets the range convention by one endpoint).
/// With `with_times` the ordered visit-time lists are retained, which the
/// shifted intersection counts need.
class OccupationMap {
 public:
  OccupationMap(const WalkSample& walk, std::int64_t n, bool with_times = false);

  std::int64_t horizon() const { return n_; }
  std::int64_t count(Vec2i site) const;
  std::int64_t distinct_sites() const { return std::int64_t(counts_.size()); }
  std::int64_t total() const;  // == horizon
  const SiteMap<std::int64_t>& counts() const { return counts_; }

  bool has_times() const { return with_times_; }
  /// Site occupied at each time index 0..n-1, reconstructed from the
  /// retained visit-time lists.
  std::vector<Vec2i> site_sequence() const;

 private:
  std::int64_t n_;
  bool with_times_;
  SiteMap<std::int64_t> counts_;
  SiteMap<std::vector<std::int32_t>> times_;
};

/// k-fold self-intersection count I_k(n): the number of nondecreasing
/// k-tuples of times sharing a site, = sum_x C(l_x + k - 1, k) over
/// occupation counts. Exact arbitrary-precision arithmetic.
BigInt ilt(const OccupationMap& occ, int k);

/// All of I_1..I_kmax in one pass.
std::vector<BigInt> ilt_all(const OccupationMap& occ, int kmax);

/// Fast exact variant in unsigned 128-bit arithmetic; valid for k <= 4 and
/// n <= 10^8 (worst case C(n+3,4) ~ 4e30 < 2^127).
unsigned __int128 ilt_u128(const OccupationMap& occ, int k);

/// Exhaustive enumeration of 0 <= i_1 <= ... <= i_k < n with the chain of
/// site coincidences. Test oracle; refuses n > 14 or k > 4.
BigInt ilt_brute(const WalkSample& walk, std::int64_t n, int k);

/// Renormalized intersection count from I_1..I_k and the counter-term g:
///   Gamma_k = sum_{j=1}^k C(k-1, j-1) (-1)^{k-j} g^{k-j} I_j.
double renorm_ilt(const std::vector<double>& i_values, int k, double g);
BigRational renorm_ilt_exact(const std::vector<BigInt>& i_values, int k,
                             const BigRational& g);

/// Shifted intersection count: nondecreasing k-tuples with consecutive
/// displacement constraints S_{i_j} - S_{i_{j-1}} = x_j (j = 2..k).
/// Dynamic program over time with per-site prefix sums, O(n k).
BigInt shifted_ilt(const OccupationMap& occ, int k, const std::vector<Vec2i>& offsets);

/// Brute-force oracle for shifted_ilt; refuses n > 14 or k > 4.
BigInt shifted_ilt_brute(const WalkSample& walk, std::int64_t n, int k,
                         const std::vector<Vec2i>& offsets);

/// Offset renormalization: alternating subset sum over A <= {2..k} of
/// prod_{i in A} G(x_i) times the shifted count with those offsets deleted.
/// `green_at` maps a lattice offset to its Green value.
template <class GreenFn>
double shifted_renorm_ilt(const OccupationMap& occ, int k,
                          const std::vector<Vec2i>& offsets, GreenFn&& green_at) {
  if (k < 1 || std::size_t(k) != offsets.size() + 1)
    throw std::invalid_argument("shifted_renorm_ilt: need k-1 offsets");
  double total = 0.0;
  const unsigned subsets = 1u << (k - 1);
  for (unsigned mask = 0; mask < subsets; ++mask) {
    double coeff = 1.0;
    std::vector<Vec2i> kept;
    for (int i = 0; i < k - 1; ++i) {
      if (mask & (1u << i))
        coeff *= -green_at(offsets[i]);
      else
        kept.push_back(offsets[i]);
    }
    const BigInt cnt = shifted_ilt(occ, k - int(__builtin_popcount(mask)), kept);
    total += coeff * cnt.convert_to<double>();
  }
  return total;
}

/// Exponentially killed horizon: zeta ~ Exp(1), zeta_lambda = ceil(zeta/lambda),
/// geometric with P(zeta_lambda > n) = e^{-lambda n}.
struct KilledHorizon {
  double lambda = 0.0;
  double zeta = 0.0;
  std::int64_t zeta_lambda = 0;
};

KilledHorizon sample_killed_horizon(double lambda, RngStream& rng);

/// One killed-walk replica: walks zeta_lambda steps (indices 0..zeta_lambda-1),
/// returning the visited-site count and, when k_max >= 2, the exact
/// intersection counts I_2..I_kmax of the killed path.
struct KilledWalkStats {
  std::int64_t zeta_lambda = 0;
  std::int64_t range = 0;     // distinct sites among indices 0 <= i < zeta_lambda
  std::vector<double> i_values;  // I_1..I_kmax as doubles (exact integers below 2^53-ish)
};

KilledWalkStats killed_walk_replica(const StepLaw& law, double lambda, int k_max,
                                    RngStream& rng);

/// Whether the walk hits x strictly before the killed horizon (T_x < zeta_lambda).
/// Stops at min(T_x, zeta_lambda).
bool hits_before_kill(const StepLaw& law, Vec2i x, double lambda, RngStream& rng);

}  // namespace rangekit
