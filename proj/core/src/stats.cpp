#include "rangekit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rangekit/specfun.hpp"

namespace rangekit {

double RunningStat::stddev() const { return std::sqrt(variance()); }

double RunningStat::std_error() const {
  return n_ > 0 ? std::sqrt(variance() / double(n_)) : 0.0;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    // Advance both CDFs past the smaller value (ties move together).
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    const double fa = double(i) / double(a.size());
    const double fb = double(j) / double(b.size());
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  double n_obs = 0.0, n_exp = 0.0;
  for (double o : observed) n_obs += o;
  for (double e : expected) n_exp += e;
  if (n_exp <= 0.0) throw std::invalid_argument("chi_square_gof: empty expectation");
  const double scale = n_obs / n_exp;

  ChiSquareResult r;
  double pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected[i] * scale;
    if (e < min_expected) {
      pool_obs += observed[i];
      pool_exp += e;
      continue;
    }
    const double d = observed[i] - e;
    r.statistic += d * d / e;
    ++r.bins;
  }
  if (pool_exp >= min_expected) {
    const double d = pool_obs - pool_exp;
    r.statistic += d * d / pool_exp;
    ++r.bins;
  }
  if (r.bins < 2) throw std::invalid_argument("chi_square_gof: fewer than 2 usable bins");
  r.dof = r.bins - 1;
  r.p_value = gamma_q(0.5 * double(r.dof), 0.5 * r.statistic);
  return r;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("fit_line: need n >= 2");
  const bool weighted = !sigma.empty();
  if (weighted && sigma.size() != n) throw std::invalid_argument("fit_line: sigma size");

  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det == 0.0) throw std::invalid_argument("fit_line: degenerate x");
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  if (weighted) {
    f.slope_se = std::sqrt(sw / det);
  } else if (n > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (f.intercept + f.slope * x[i]);
      ss += r * r;
    }
    f.slope_se = std::sqrt(ss / double(n - 2) * sw / det);
  }
  return f;
}

Extrapolation aitken(const std::vector<double>& levels) {
  Extrapolation e;
  e.levels = levels;
  if (levels.empty()) throw std::invalid_argument("aitken: no levels");
  e.value = levels.back();
  if (levels.size() < 3) {
    e.converged = false;
    e.last_gap = levels.size() == 2 ? std::fabs(levels[1] - levels[0]) : 0.0;
    return e;
  }
  const std::size_t k = levels.size();
  const double d1 = levels[k - 2] - levels[k - 3];
  const double d2 = levels[k - 1] - levels[k - 2];
  e.last_gap = std::fabs(d2);
  const double den = d2 - d1;
  const double scale = std::fabs(levels[k - 1]) + std::fabs(d1) + std::fabs(d2);
  if (std::fabs(den) < 1e-14 * (scale + 1e-300)) {
    // levels already flat (or exactly linear drift): keep last level
    e.converged = std::fabs(d2) <= 1e-12 * (std::fabs(levels[k - 1]) + 1e-300);
    return e;
  }
  // When the differences nearly cancel the geometric model is wrong and the
  // correction amplifies noise without bound; clamp it to the range a ratio
  // in [0, 4/5] u [4/3, inf) could produce and flag the level otherwise.
  const double correction = -d2 * d2 / den;
  if (std::fabs(correction) > 4.0 * std::fabs(d2)) {
    e.converged = false;
    return e;
  }
  e.value = levels[k - 1] + correction;
  return e;
}

}  // namespace rangekit
