#pragma once

#include <cstdint>
#include <vector>

#include "rangekit/rng.hpp"
#include "rangekit/stats.hpp"

namespace rangekit {

/// Planar Brownian path on a uniform grid: W_0 = 0, W_h, ..., W_{Nh}.
struct BrownPath {
  double h = 0.0;
  std::vector<double> xs, ys;  // N + 1 points
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::int64_t steps() const { return std::int64_t(xs.size()) - 1; }
  double horizon() const { return h * double(steps()); }
};

BrownPath simulate_bm(double h, double T, std::uint64_t seed, std::uint64_t stream = 0);

/// Kernel resolution rule: the mollifier scale eps should satisfy
/// eps >= kEpsResolutionFactor * h, otherwise the discretized simplex sum is
/// dominated by same-cell artifacts.
inline constexpr double kEpsResolutionFactor = 4.0;
inline bool eps_under_resolved(double h, double eps) {
  return eps < kEpsResolutionFactor * h;
}

/// Mollified self-intersection integrals over the ordered time simplex,
///   alpha_{k,eps}(t) = int_{0<=t_1<=...<=t_k<t} prod p_eps(W_{t_i}-W_{t_{i-1}}),
/// discretized on the path grid with trapezoidal half-weights on repeated
/// consecutive indices (this cancels the leading h/eps discretization bias).
/// Returns alpha_{1,eps}..alpha_{k,eps}; O(k N^2) reference recursion.
std::vector<double> alpha_upto_k(const BrownPath& path, int k, double eps, double t);

/// alpha_{k,eps}(t) alone.
double alpha_k_eps(const BrownPath& path, int k, double eps, double t);

/// Fast k = 2 evaluation via a spatial cell index and a cutoff Gaussian
/// kernel table: relative accuracy ~1e-6 against the exact recursion.
double alpha_2_grid(const BrownPath& path, double eps, double t);

/// u_eps = int_0^inf e^-t p_{t+eps}(0) dt = e^eps E1(eps) / (2 pi).
double u_eps(double eps);

/// u1(y) = int_0^inf e^-t p_t(y) dt = K0(sqrt(2)|y|) / pi, y != 0.
double u_one(double yx, double yy);

/// Counter-term schedule: value h(eps) for each eps level.
struct CounterTerm {
  std::vector<double> eps;    // decreasing
  std::vector<double> value;  // h(eps) per level
};

CounterTerm u_counter_term(const std::vector<double>& eps_schedule);

struct GammaResult {
  Extrapolation extrapolation;          // levels = renormalized sums per eps
  std::vector<double> eps_schedule;
  std::vector<std::vector<double>> alpha_levels;  // alpha_1..alpha_k per eps
  bool under_resolved = false;          // some eps < kEpsResolutionFactor h
  double value() const { return extrapolation.value; }
};

/// Renormalized self-intersection local time
///   gamma_k(t) = lim_eps sum_l C(k-1,l-1) (-u_eps)^{k-l} alpha_{l,eps}(t),
/// evaluated on the eps schedule and extrapolated. With `use_grid` the k = 2
/// pair sums go through the cell index.
GammaResult gamma_k(const BrownPath& path, int k, double t,
                    const std::vector<double>& eps_schedule, bool use_grid = true);

/// Same pipeline with an arbitrary counter-term in place of u_eps.
GammaResult hat_gamma(const BrownPath& path, int k, double t,
                      const CounterTerm& counter, bool use_grid = true);

/// Exact counter-term change of variables: given hat-gamma_1..k at
/// counter-term hbar and b = lim(h_eps - hbar_eps),
///   hat-gamma_k(t,h) = sum_m C(k-1,m-1) (-b)^{k-m} hat-gamma_m(t,hbar).
/// Composable; transform by b then -b is the identity.
std::vector<double> renorm_transform(const std::vector<double>& values, double b);

/// Brownian scaling w_r(s) = r^{-1/2} w(rs): exact on the grid, the output
/// path has step h/r and the same number of points.
BrownPath rescale_path(const BrownPath& path, double r);

/// Scaling law for renormalized intersection local times: from
/// hat-gamma_1..k at horizon r*t on the base path, predicts
///   hat-gamma_k(t, ., w_r) = r^-1 sum_m C(k-1,m-1) b_r^{k-m} hat-gamma_m(rt),
/// with b_r = (1/2pi) log(1/r).
double rescale_gamma(const std::vector<double>& values_at_rt, double r, int k);

/// Offset variant at order two: alpha-bar_{2,eps}(t,x) with displacement x,
/// and its renormalization gamma-bar_2(t,x) = alpha-bar_{2,eps}(t,x) - u1(x) t.
double alpha_bar_2(const BrownPath& path, double eps, double t, double xx, double xy);
double gamma_bar_2(const BrownPath& path, double eps, double t, double xx, double xy);

}  // namespace rangekit
