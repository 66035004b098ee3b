#include "rangekit/walk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rangekit {

WalkSample simulate_walk(const StepLaw& law, std::int64_t n, std::uint64_t seed,
                         std::uint64_t stream) {
  if (n < 0) throw std::invalid_argument("simulate_walk: n >= 0");
  WalkSample w;
  w.seed = seed;
  w.stream = stream;
  w.positions.reserve(std::size_t(n) + 1);
  w.positions.push_back({0, 0});
  RngStream rng(seed, stream);
  Vec2i pos{0, 0};
  for (std::int64_t i = 0; i < n; ++i) {
    pos = pos + law.sample_step(rng);
    w.positions.push_back(pos);
  }
  return w;
}

std::int64_t range_size(const WalkSample& walk, std::int64_t n) {
  if (n > walk.steps()) throw std::invalid_argument("range_size: n beyond path");
  SiteSet seen(std::size_t(std::max<std::int64_t>(n, 1)));
  std::int64_t count = 0;
  for (std::int64_t i = 1; i <= n; ++i)
    if (seen.insert(walk.positions[std::size_t(i)])) ++count;
  return count;
}

std::vector<std::int64_t> range_checkpoints(const StepLaw& law,
                                            const std::vector<std::int64_t>& n_values,
                                            std::uint64_t seed, std::uint64_t stream) {
  for (std::size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] < n_values[i - 1])
      throw std::invalid_argument("range_checkpoints: n values must ascend");
  if (n_values.empty()) return {};
  RngStream rng(seed, stream);
  SiteSet seen(std::size_t(n_values.back() / 2 + 64));
  std::vector<std::int64_t> out;
  out.reserve(n_values.size());
  Vec2i pos{0, 0};
  std::int64_t range = 0;
  std::int64_t n = 0;
  for (std::int64_t target : n_values) {
    for (; n < target; ++n) {
      pos = pos + law.sample_step(rng);
      if (seen.insert(pos)) ++range;
    }
    out.push_back(range);
  }
  return out;
}

OccupationMap::OccupationMap(const WalkSample& walk, std::int64_t n, bool with_times)
    : n_(n), with_times_(with_times), counts_(std::size_t(std::max<std::int64_t>(n, 1))) {
  if (n > walk.steps() + 1) throw std::invalid_argument("occupation: n beyond path");
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec2i s = walk.positions[std::size_t(i)];
    ++counts_[s];
    if (with_times_) times_[s].push_back(std::int32_t(i));
  }
}

std::int64_t OccupationMap::count(Vec2i site) const {
  const std::int64_t* c = counts_.find(site);
  return c ? *c : 0;
}

std::int64_t OccupationMap::total() const {
  std::int64_t t = 0;
  counts_.for_each([&](Vec2i, const std::int64_t& c) { t += c; });
  return t;
}

std::vector<Vec2i> OccupationMap::site_sequence() const {
  if (!with_times_) throw std::logic_error("occupation built without visit times");
  std::vector<Vec2i> seq(static_cast<std::size_t>(n_));
  times_.for_each([&](Vec2i s, const std::vector<std::int32_t>& ts) {
    for (std::int32_t t : ts) seq[std::size_t(t)] = s;
  });
  return seq;
}

namespace {

// C(l + k - 1, k) by exact sequential multiply/divide.
BigInt multiset_coeff(std::int64_t l, int k) {
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= (l + i - 1);
    r /= i;
  }
  return r;
}

unsigned __int128 multiset_coeff_u128(std::int64_t l, int k) {
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= (unsigned __int128)(l + i - 1);
    r /= (unsigned)i;
  }
  return r;
}

double u128_to_double(unsigned __int128 v) {
  return std::ldexp(double(std::uint64_t(v >> 64)), 64) + double(std::uint64_t(v));
}

}  // namespace

BigInt ilt(const OccupationMap& occ, int k) {
  if (k < 1) throw std::invalid_argument("ilt: k >= 1");
  if (k == 1) return BigInt(occ.horizon());
  BigInt total = 0;
  occ.counts().for_each([&](Vec2i, const std::int64_t& l) {
    total += multiset_coeff(l, k);
  });
  return total;
}

std::vector<BigInt> ilt_all(const OccupationMap& occ, int kmax) {
  std::vector<BigInt> out;
  for (int k = 1; k <= kmax; ++k) out.push_back(ilt(occ, k));
  return out;
}

unsigned __int128 ilt_u128(const OccupationMap& occ, int k) {
  if (k < 1 || k > 4) throw std::invalid_argument("ilt_u128: 1 <= k <= 4");
  if (occ.horizon() > 100000000) throw std::invalid_argument("ilt_u128: n too large");
  if (k == 1) return (unsigned __int128)occ.horizon();
  unsigned __int128 total = 0;
  occ.counts().for_each([&](Vec2i, const std::int64_t& l) {
    total += multiset_coeff_u128(l, k);
  });
  return total;
}

BigInt ilt_brute(const WalkSample& walk, std::int64_t n, int k) {
  if (n > 14 || k > 4) throw std::invalid_argument("ilt_brute: RefusedTooLarge");
  if (n > walk.steps() + 1) throw std::invalid_argument("ilt_brute: n beyond path");
  if (k < 1) throw std::invalid_argument("ilt_brute: k >= 1");
  // Chains i_1 <= ... <= i_k < n with S_{i_1} = S_{i_2} = ... = S_{i_k};
  // recursive descent, pruning on the site constraint.
  BigInt total = 0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, int depth, std::int64_t lo) -> void {
    if (depth == k) {
      total += 1;
      return;
    }
    for (std::int64_t i = lo; i < n; ++i) {
      if (depth > 0 &&
          !(walk.positions[std::size_t(i)] == walk.positions[std::size_t(idx[std::size_t(depth - 1)])]))
        continue;
      idx[std::size_t(depth)] = i;
      self(self, depth + 1, i);
    }
  };
  rec(rec, 0, 0);
  return total;
}

double renorm_ilt(const std::vector<double>& i_values, int k, double g) {
  if (k < 1 || i_values.size() < std::size_t(k))
    throw std::invalid_argument("renorm_ilt: need I_1..I_k");
  double total = 0.0;
  for (int j = 1; j <= k; ++j) {
    double coeff = double(binomial(unsigned(k - 1), unsigned(j - 1)));
    double gpow = 1.0;
    for (int m = 0; m < k - j; ++m) gpow *= -g;
    total += coeff * gpow * i_values[std::size_t(j - 1)];
  }
  return total;
}

BigRational renorm_ilt_exact(const std::vector<BigInt>& i_values, int k,
                             const BigRational& g) {
  if (k < 1 || i_values.size() < std::size_t(k))
    throw std::invalid_argument("renorm_ilt_exact: need I_1..I_k");
  BigRational total = 0;
  for (int j = 1; j <= k; ++j) {
    BigRational term(i_values[std::size_t(j - 1)]);
    term *= BigInt(binomial(unsigned(k - 1), unsigned(j - 1)));
    for (int m = 0; m < k - j; ++m) term *= -g;
    total += term;
  }
  return total;
}

BigInt shifted_ilt(const OccupationMap& occ, int k, const std::vector<Vec2i>& offsets) {
  if (k < 1) throw std::invalid_argument("shifted_ilt: k >= 1");
  if (offsets.size() != std::size_t(k - 1))
    throw std::invalid_argument("shifted_ilt: need k-1 offsets");
  const std::int64_t n = occ.horizon();
  if (k == 1) return BigInt(n);

  const std::vector<Vec2i> seq = occ.site_sequence();
  // g_1(i) = 1; g_j(i) = sum_{i' <= i, S_{i'} = S_i - x_j} g_{j-1}(i').
  // One forward pass per level with a site-keyed running prefix sum; the
  // level value at i is folded in before the query so that i' = i is
  // included exactly when x_j = 0.
  std::vector<BigInt> cur(std::size_t(n), BigInt(1)), next(static_cast<std::size_t>(n));
  for (int j = 2; j <= k; ++j) {
    const Vec2i x = offsets[std::size_t(j - 2)];
    SiteMap<BigInt> prefix(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      prefix[seq[std::size_t(i)]] += cur[std::size_t(i)];
      const BigInt* p = prefix.find(seq[std::size_t(i)] - x);
      next[std::size_t(i)] = p ? *p : BigInt(0);
    }
    cur.swap(next);
  }
  BigInt total = 0;
  for (std::int64_t i = 0; i < n; ++i) total += cur[std::size_t(i)];
  return total;
}

BigInt shifted_ilt_brute(const WalkSample& walk, std::int64_t n, int k,
                         const std::vector<Vec2i>& offsets) {
  if (n > 14 || k > 4) throw std::invalid_argument("shifted_ilt_brute: RefusedTooLarge");
  if (offsets.size() != std::size_t(k - 1))
    throw std::invalid_argument("shifted_ilt_brute: need k-1 offsets");
  BigInt total = 0;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, int depth, std::int64_t lo) -> void {
    if (depth == k) {
      total += 1;
      return;
    }
    for (std::int64_t i = lo; i < n; ++i) {
      if (depth > 0) {
        const Vec2i d = walk.positions[std::size_t(i)] -
                        walk.positions[std::size_t(idx[std::size_t(depth - 1)])];
        if (!(d == offsets[std::size_t(depth - 1)])) continue;
      }
      idx[std::size_t(depth)] = i;
      self(self, depth + 1, i);
    }
  };
  rec(rec, 0, 0);
  return total;
}

KilledHorizon sample_killed_horizon(double lambda, RngStream& rng) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("sample_killed_horizon: 0 < lambda < 1");
  KilledHorizon h;
  h.lambda = lambda;
  h.zeta = rng.exponential();
  h.zeta_lambda = std::max<std::int64_t>(1, std::int64_t(std::ceil(h.zeta / lambda)));
  return h;
}

KilledWalkStats killed_walk_replica(const StepLaw& law, double lambda, int k_max,
                                    RngStream& rng) {
  const KilledHorizon h = sample_killed_horizon(lambda, rng);
  KilledWalkStats out;
  out.zeta_lambda = h.zeta_lambda;

  SiteMap<std::int64_t> counts(std::size_t(h.zeta_lambda));
  Vec2i pos{0, 0};
  for (std::int64_t i = 0; i < h.zeta_lambda; ++i) {
    ++counts[pos];
    if (i + 1 < h.zeta_lambda) pos = pos + law.sample_step(rng);
  }
  out.range = std::int64_t(counts.size());
  if (k_max >= 1) {
    out.i_values.assign(std::size_t(k_max), 0.0);
    out.i_values[0] = double(h.zeta_lambda);
    counts.for_each([&](Vec2i, const std::int64_t& l) {
      for (int k = 2; k <= k_max; ++k)
        out.i_values[std::size_t(k - 1)] += u128_to_double(multiset_coeff_u128(l, k));
    });
  }
  return out;
}

bool hits_before_kill(const StepLaw& law, Vec2i x, double lambda, RngStream& rng) {
  const KilledHorizon h = sample_killed_horizon(lambda, rng);
  Vec2i pos{0, 0};
  if (pos == x) return true;  // T_0 = 0 < zeta_lambda always
  for (std::int64_t i = 1; i < h.zeta_lambda; ++i) {
    pos = pos + law.sample_step(rng);
    if (pos == x) return true;
  }
  return false;
}

}  // namespace rangekit
