#include "rangekit/brownian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rangekit/specfun.hpp"

namespace rangekit {

BrownPath simulate_bm(double h, double T, std::uint64_t seed, std::uint64_t stream) {
  if (!(h > 0.0) || !(T >= h)) throw std::invalid_argument("simulate_bm: 0 < h <= T");
  const std::int64_t n = std::int64_t(std::ceil(T / h - 1e-12));
  BrownPath p;
  p.h = h;
  p.seed = seed;
  p.stream = stream;
  p.xs.resize(std::size_t(n) + 1);
  p.ys.resize(std::size_t(n) + 1);
  p.xs[0] = p.ys[0] = 0.0;
  RngStream rng(seed, stream);
  const double s = std::sqrt(h);
  for (std::int64_t i = 0; i < n; ++i) {
    p.xs[std::size_t(i + 1)] = p.xs[std::size_t(i)] + s * rng.gaussian();
    p.ys[std::size_t(i + 1)] = p.ys[std::size_t(i)] + s * rng.gaussian();
  }
  return p;
}

namespace {

std::int64_t points_for(const BrownPath& path, double t) {
  const std::int64_t n = std::int64_t(std::llround(t / path.h));
  if (n < 1 || n > path.steps() + 1)
    throw std::invalid_argument("alpha: t outside the path horizon");
  return n;  // time indices 0..n-1 cover [0, t)
}

}  // namespace

std::vector<double> alpha_upto_k(const BrownPath& path, int k, double eps, double t) {
  if (k < 1) throw std::invalid_argument("alpha: k >= 1");
  if (!(eps > 0.0)) throw std::invalid_argument("alpha: eps > 0");
  const std::int64_t n = points_for(path, t);
  const double h = path.h;
  std::vector<double> out(static_cast<std::size_t>(k));
  out[0] = h * double(n);
  if (k == 1) return out;

  const double norm = 1.0 / (kTwoPi * eps);
  const double inv2e = 1.0 / (2.0 * eps);
  // F_1 = 1; F_j(i) = sum_{i'<i} F_{j-1}(i') p_eps(W_i - W_{i'})
  //               + (1/2) F_{j-1}(i) p_eps(0).
  std::vector<double> cur(static_cast<std::size_t>(n), 1.0), next(static_cast<std::size_t>(n));
  for (int j = 2; j <= k; ++j) {
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = 0.0;
      const double xi = path.xs[std::size_t(i)], yi = path.ys[std::size_t(i)];
      for (std::int64_t q = 0; q < i; ++q) {
        const double dx = xi - path.xs[std::size_t(q)];
        const double dy = yi - path.ys[std::size_t(q)];
        acc += cur[std::size_t(q)] * std::exp(-(dx * dx + dy * dy) * inv2e);
      }
      acc += 0.5 * cur[std::size_t(i)];
      next[std::size_t(i)] = acc * norm;
    }
    cur.swap(next);
    double total = 0.0;
    for (double v : cur) total += v;
    double hp = 1.0;
    for (int q = 0; q < j; ++q) hp *= h;
    out[std::size_t(j - 1)] = hp * total;
  }
  return out;
}

double alpha_k_eps(const BrownPath& path, int k, double eps, double t) {
  return alpha_upto_k(path, k, eps, t).back();
}

double alpha_2_grid(const BrownPath& path, double eps, double t) {
  if (!(eps > 0.0)) throw std::invalid_argument("alpha_2_grid: eps > 0");
  const std::int64_t n = points_for(path, t);
  const double h = path.h;

  // With half-weight on the diagonal the ordered pair sum collapses to
  // half the full symmetric sum: sum_{i<j} K + (1/2) sum_i K(0)
  //   = (1/2) sum_{i,j} K(W_i - W_j).
  const double cutoff_q = 25.0;  // |dW|^2 / eps beyond which the kernel is dropped
  static constexpr int kLut = 4096;
  static thread_local std::vector<double> lut;
  if (lut.size() != kLut + 2) {
    lut.assign(kLut + 2, 0.0);
    for (int i = 0; i <= kLut; ++i)
      lut[std::size_t(i)] = std::exp(-0.5 * cutoff_q * double(i) / double(kLut));
  }
  const double lut_scale = double(kLut) / cutoff_q;

  const double cell = 0.5 * std::sqrt(cutoff_q * eps);  // 5x5 neighborhood suffices
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    min_x = std::min(min_x, path.xs[std::size_t(i)]);
    max_x = std::max(max_x, path.xs[std::size_t(i)]);
    min_y = std::min(min_y, path.ys[std::size_t(i)]);
    max_y = std::max(max_y, path.ys[std::size_t(i)]);
  }
  const int gx = int((max_x - min_x) / cell) + 1;
  const int gy = int((max_y - min_y) / cell) + 1;

  // Counting-sort the points into a CSR cell layout.
  std::vector<std::int32_t> cell_of(static_cast<std::size_t>(n));
  std::vector<std::int32_t> count(std::size_t(gx) * std::size_t(gy) + 1, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    const int cx = int((path.xs[std::size_t(i)] - min_x) / cell);
    const int cy = int((path.ys[std::size_t(i)] - min_y) / cell);
    const std::int32_t c = std::int32_t(cx * gy + cy);
    cell_of[std::size_t(i)] = c;
    ++count[std::size_t(c) + 1];
  }
  for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  {
    std::vector<std::int32_t> fill(count.begin(), count.end() - 1);
    for (std::int64_t i = 0; i < n; ++i)
      order[std::size_t(fill[std::size_t(cell_of[std::size_t(i)])]++)] = std::int32_t(i);
  }

  const double inv_eps = 1.0 / eps;
  double total = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double xi = path.xs[std::size_t(i)], yi = path.ys[std::size_t(i)];
    const int cx = cell_of[std::size_t(i)] / gy;
    const int cy = cell_of[std::size_t(i)] % gy;
    double acc = 0.0;
    for (int ax = std::max(0, cx - 2); ax <= std::min(gx - 1, cx + 2); ++ax)
      for (int ay = std::max(0, cy - 2); ay <= std::min(gy - 1, cy + 2); ++ay) {
        const std::size_t c = std::size_t(ax) * std::size_t(gy) + std::size_t(ay);
        const std::int32_t lo = count[c], hi = count[c + 1];
        for (std::int32_t s = lo; s < hi; ++s) {
          const std::int32_t j = order[std::size_t(s)];
          const double dx = xi - path.xs[std::size_t(j)];
          const double dy = yi - path.ys[std::size_t(j)];
          const double q = (dx * dx + dy * dy) * inv_eps;
          if (q >= cutoff_q) continue;
          const double u = q * lut_scale;
          const int b = int(u);
          acc += lut[std::size_t(b)] + (u - b) * (lut[std::size_t(b) + 1] - lut[std::size_t(b)]);
        }
      }
    total += acc;
  }
  return 0.5 * total * h * h / (kTwoPi * eps);
}

double u_eps(double eps) {
  if (!(eps > 0.0)) throw std::domain_error("u_eps: eps > 0");
  return std::exp(eps) * expint_e1(eps) / kTwoPi;
}

double u_one(double yx, double yy) {
  const double r = std::hypot(yx, yy);
  if (!(r > 0.0)) throw std::domain_error("u_one: y != 0");
  return bessel_k0(r * std::sqrt(2.0)) / kPi;
}

CounterTerm u_counter_term(const std::vector<double>& eps_schedule) {
  CounterTerm c;
  c.eps = eps_schedule;
  for (double e : eps_schedule) c.value.push_back(u_eps(e));
  return c;
}

namespace {

GammaResult gamma_pipeline(const BrownPath& path, int k, double t,
                           const CounterTerm& counter, bool use_grid) {
  if (k < 1) throw std::invalid_argument("gamma: k >= 1");
  if (counter.eps.size() != counter.value.size() || counter.eps.size() < 3)
    throw std::invalid_argument("gamma: schedule needs >= 3 levels");
  for (std::size_t i = 1; i < counter.eps.size(); ++i)
    if (!(counter.eps[i] < counter.eps[i - 1]))
      throw std::invalid_argument("gamma: eps schedule must decrease");

  GammaResult out;
  out.eps_schedule = counter.eps;
  std::vector<double> levels;
  for (std::size_t lev = 0; lev < counter.eps.size(); ++lev) {
    const double eps = counter.eps[lev];
    if (eps_under_resolved(path.h, eps)) out.under_resolved = true;
    std::vector<double> alpha;
    if (k == 1) {
      alpha = {alpha_upto_k(path, 1, eps, t)[0]};
    } else if (k == 2 && use_grid) {
      alpha = {alpha_upto_k(path, 1, eps, t)[0], alpha_2_grid(path, eps, t)};
    } else {
      alpha = alpha_upto_k(path, k, eps, t);
    }
    const double hval = counter.value[lev];
    double sum = 0.0;
    for (int l = 1; l <= k; ++l) {
      double coeff = double(binomial(unsigned(k - 1), unsigned(l - 1)));
      for (int q = 0; q < k - l; ++q) coeff *= -hval;
      sum += coeff * alpha[std::size_t(l - 1)];
    }
    out.alpha_levels.push_back(std::move(alpha));
    levels.push_back(sum);
  }
  out.extrapolation = aitken(levels);
  if (k == 1) {
    // gamma_1(t) = t at every level by construction.
    out.extrapolation.value = levels.back();
    out.extrapolation.converged = true;
  }
  return out;
}

}  // namespace

GammaResult gamma_k(const BrownPath& path, int k, double t,
                    const std::vector<double>& eps_schedule, bool use_grid) {
  return gamma_pipeline(path, k, t, u_counter_term(eps_schedule), use_grid);
}

GammaResult hat_gamma(const BrownPath& path, int k, double t,
                      const CounterTerm& counter, bool use_grid) {
  return gamma_pipeline(path, k, t, counter, use_grid);
}

std::vector<double> renorm_transform(const std::vector<double>& values, double b) {
  std::vector<double> out(values.size());
  for (std::size_t k = 1; k <= values.size(); ++k) {
    double sum = 0.0;
    for (std::size_t m = 1; m <= k; ++m) {
      double coeff = double(binomial(unsigned(k - 1), unsigned(m - 1)));
      for (std::size_t q = 0; q < k - m; ++q) coeff *= -b;
      sum += coeff * values[m - 1];
    }
    out[k - 1] = sum;
  }
  return out;
}

BrownPath rescale_path(const BrownPath& path, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("rescale_path: r > 0");
  BrownPath out;
  out.h = path.h / r;
  out.seed = path.seed;
  out.stream = path.stream;
  const double s = 1.0 / std::sqrt(r);
  out.xs.resize(path.xs.size());
  out.ys.resize(path.ys.size());
  for (std::size_t i = 0; i < path.xs.size(); ++i) {
    out.xs[i] = path.xs[i] * s;  // w_r(i h/r) = w(i h) / sqrt(r), exact on the grid
    out.ys[i] = path.ys[i] * s;
  }
  return out;
}

double rescale_gamma(const std::vector<double>& values_at_rt, double r, int k) {
  if (k < 1 || values_at_rt.size() < std::size_t(k))
    throw std::invalid_argument("rescale_gamma: need hat-gamma_1..k");
  const double br = std::log(1.0 / r) / kTwoPi;
  double sum = 0.0;
  for (int m = 1; m <= k; ++m) {
    double coeff = double(binomial(unsigned(k - 1), unsigned(m - 1)));
    for (int q = 0; q < k - m; ++q) coeff *= br;
    sum += coeff * values_at_rt[std::size_t(m - 1)];
  }
  return sum / r;
}

double alpha_bar_2(const BrownPath& path, double eps, double t, double xx, double xy) {
  const std::int64_t n = points_for(path, t);
  const double h = path.h;
  const double norm = 1.0 / (kTwoPi * eps);
  const double inv2e = 1.0 / (2.0 * eps);
  double total = 0.0;
  for (std::int64_t j = 0; j < n; ++j) {
    const double xj = path.xs[std::size_t(j)], yj = path.ys[std::size_t(j)];
    double acc = 0.0;
    for (std::int64_t i = 0; i < j; ++i) {
      const double dx = xj - path.xs[std::size_t(i)] - xx;
      const double dy = yj - path.ys[std::size_t(i)] - xy;
      acc += std::exp(-(dx * dx + dy * dy) * inv2e);
    }
    acc += 0.5 * std::exp(-(xx * xx + xy * xy) * inv2e);  // i = j term, half weight
    total += acc;
  }
  return total * norm * h * h;
}

double gamma_bar_2(const BrownPath& path, double eps, double t, double xx, double xy) {
  const std::int64_t n = points_for(path, t);
  return alpha_bar_2(path, eps, t, xx, xy) - u_one(xx, xy) * path.h * double(n);
}

}  // namespace rangekit
