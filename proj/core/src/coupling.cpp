#include "rangekit/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "rangekit/specfun.hpp"

namespace rangekit {

LatticePmf walk_block_pmf(const StepLaw& law, int block) {
  if (block < 1) throw std::invalid_argument("walk_block_pmf: block >= 1");
  LatticePmf cur;
  cur.radius = 0;
  cur.p = {1.0};
  for (int b = 0; b < block; ++b) {
    LatticePmf next;
    next.radius = cur.radius + law.max_step();
    const int side = 2 * next.radius + 1;
    next.p.assign(std::size_t(side) * std::size_t(side), 0.0);
    for (int x = -cur.radius; x <= cur.radius; ++x)
      for (int y = -cur.radius; y <= cur.radius; ++y) {
        const double m = cur.at(x, y);
        if (m == 0.0) continue;
        for (const auto& e : law.entries())
          next.ref(x + e.step.x, y + e.step.y) += m * e.prob;
      }
    cur = std::move(next);
  }
  double total = 0.0;
  for (double v : cur.p) total += v;
  for (double& v : cur.p) v /= total;
  return cur;
}

LatticePmf gaussian_block_pmf(double var, double halfwidth_sigmas) {
  if (!(var > 0.0)) throw std::invalid_argument("gaussian_block_pmf: var > 0");
  const double sigma = std::sqrt(var);
  const int radius = std::max(2, int(std::ceil(sigma * halfwidth_sigmas)) + 1);
  const int side = 2 * radius + 1;
  // P(round(Y) = x) = Phi((x+1/2)/sigma) - Phi((x-1/2)/sigma), per coordinate.
  std::vector<double> one(static_cast<std::size_t>(side));
  const double inv = 1.0 / (sigma * std::sqrt(2.0));
  for (int x = -radius; x <= radius; ++x)
    one[std::size_t(x + radius)] =
        0.5 * (std::erf((double(x) + 0.5) * inv) - std::erf((double(x) - 0.5) * inv));
  LatticePmf g;
  g.radius = radius;
  g.p.resize(std::size_t(side) * std::size_t(side));
  double total = 0.0;
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      const double v = one[std::size_t(i)] * one[std::size_t(j)];
      g.p[std::size_t(i) * std::size_t(side) + std::size_t(j)] = v;
      total += v;
    }
  for (double& v : g.p) v /= total;
  return g;
}

namespace {

LatticePmf pad_to_radius(const LatticePmf& src, int radius) {
  LatticePmf out;
  out.radius = radius;
  const int side = 2 * radius + 1;
  out.p.assign(std::size_t(side) * std::size_t(side), 0.0);
  for (int x = -src.radius; x <= src.radius; ++x)
    for (int y = -src.radius; y <= src.radius; ++y) out.ref(x, y) = src.at(x, y);
  return out;
}

// Separable kernel application: out(x) = sum_y k(|x1-y1|) k(|x2-y2|) in(y).
void apply_kernel(const std::vector<double>& in, std::vector<double>& out,
                  std::vector<double>& scratch, int side,
                  const std::vector<double>& kern, int kw) {
  // rows: scratch(i,j) = sum_d k(|d|) in(i, j+d)
  for (int i = 0; i < side; ++i) {
    const double* row = in.data() + std::size_t(i) * std::size_t(side);
    double* dst = scratch.data() + std::size_t(i) * std::size_t(side);
    for (int j = 0; j < side; ++j) {
      double acc = row[j] * kern[0];
      const int lo = std::max(0, j - kw), hi = std::min(side - 1, j + kw);
      for (int q = j + 1; q <= hi; ++q) acc += row[q] * kern[std::size_t(q - j)];
      for (int q = lo; q < j; ++q) acc += row[q] * kern[std::size_t(j - q)];
      dst[j] = acc;
    }
  }
  // columns
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) {
      double acc = scratch[std::size_t(i) * std::size_t(side) + std::size_t(j)] * kern[0];
      const int lo = std::max(0, i - kw), hi = std::min(side - 1, i + kw);
      for (int q = i + 1; q <= hi; ++q)
        acc += scratch[std::size_t(q) * std::size_t(side) + std::size_t(j)] * kern[std::size_t(q - i)];
      for (int q = lo; q < i; ++q)
        acc += scratch[std::size_t(q) * std::size_t(side) + std::size_t(j)] * kern[std::size_t(i - q)];
      out[std::size_t(i) * std::size_t(side) + std::size_t(j)] = acc;
    }
  }
}

struct SinkhornOutcome {
  bool converged = false;
  int iterations = 0;
  double defect_gauss = 0.0;
  std::vector<double> u, v;
};

// Alternating scaling ending on the walk-side update, so u o K v has the
// walk marginal exact. Convergence is the L1 defect of the Gaussian side.
SinkhornOutcome run_sinkhorn(const std::vector<double>& a, const std::vector<double>& b,
                             int side, const std::vector<double>& kern, int kw,
                             double tol, int cap) {
  const std::size_t n = a.size();
  SinkhornOutcome o;
  o.u.assign(n, 0.0);
  o.v.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) o.v[i] = (b[i] > 0.0) ? 1.0 : 0.0;
  std::vector<double> tmp(n), scratch(n);
  double prev_defect = 2.0;
  int stall = 0;
  for (int it = 1; it <= cap; ++it) {
    apply_kernel(o.v, tmp, scratch, side, kern, kw);
    for (std::size_t i = 0; i < n; ++i) o.u[i] = (a[i] > 0.0 && tmp[i] > 0.0) ? a[i] / tmp[i] : 0.0;
    apply_kernel(o.u, tmp, scratch, side, kern, kw);
    double defect = 0.0;
    for (std::size_t i = 0; i < n; ++i) defect += std::fabs(o.v[i] * tmp[i] - b[i]);
    o.iterations = it;
    if (defect <= tol) {
      o.converged = true;
      o.defect_gauss = defect;
      return o;
    }
    // Stall detection: linear convergence should shave >1% per 50 rounds.
    if (it % 50 == 0) {
      if (defect > 0.99 * prev_defect) {
        if (++stall >= 2) break;
      } else {
        stall = 0;
      }
      prev_defect = defect;
    }
    for (std::size_t i = 0; i < n; ++i)
      o.v[i] = (b[i] > 0.0 && tmp[i] > 0.0) ? b[i] / tmp[i] : 0.0;
  }
  // Leave marginals in the end-on-u state for defect reporting.
  apply_kernel(o.v, tmp, scratch, side, kern, kw);
  for (std::size_t i = 0; i < n; ++i) o.u[i] = (a[i] > 0.0 && tmp[i] > 0.0) ? a[i] / tmp[i] : 0.0;
  apply_kernel(o.u, tmp, scratch, side, kern, kw);
  double defect = 0.0;
  for (std::size_t i = 0; i < n; ++i) defect += std::fabs(o.v[i] * tmp[i] - b[i]);
  o.defect_gauss = defect;
  o.converged = defect <= tol;
  return o;
}

std::vector<double> truncated_gauss_kernel(double eta, int& kw) {
  kw = int(std::ceil(std::sqrt(37.0 * eta)));  // exp(-d^2/eta) < 1e-16 beyond
  std::vector<double> k(std::size_t(kw) + 1);
  for (int d = 0; d <= kw; ++d) k[std::size_t(d)] = std::exp(-double(d) * double(d) / eta);
  return k;
}

}  // namespace

BlockCoupler BlockCoupler::build(const StepLaw& law, int block, double halfwidth_sigmas,
                                 double marginal_tol, int iteration_cap) {
  if (block < 1 || block > 256 || (block & (block - 1)) != 0)
    throw std::invalid_argument("BlockCoupler: block must be a power of two in [1,256]");
  BlockCoupler c;
  c.block_ = block;

  const LatticePmf walk = walk_block_pmf(law, block);
  const LatticePmf gauss = gaussian_block_pmf(double(block), halfwidth_sigmas);
  c.radius_ = std::max(walk.radius, gauss.radius);
  c.walk_pmf_ = pad_to_radius(walk, c.radius_);
  c.gauss_pmf_ = pad_to_radius(gauss, c.radius_);
  const int side = 2 * c.radius_ + 1;

  // Smallest eta (halving from 8) whose scaling run converges within cap.
  SinkhornOutcome best;
  double best_eta = 0.0;
  for (double eta = 8.0; eta >= 0.125; eta *= 0.5) {
    int kw = 0;
    const std::vector<double> kern = truncated_gauss_kernel(eta, kw);
    SinkhornOutcome o =
        run_sinkhorn(c.walk_pmf_.p, c.gauss_pmf_.p, side, kern, kw, marginal_tol, iteration_cap);
    if (!o.converged) break;
    best = std::move(o);
    best_eta = eta;
  }
  if (best_eta == 0.0)
    throw CouplerNotConverged("BlockCoupler: no eta reached the marginal tolerance",
                              best.defect_gauss);
  c.eta_ = best_eta;
  c.kernel_ = truncated_gauss_kernel(best_eta, c.kernel_w_);
  c.u_ = std::move(best.u);
  c.v_ = std::move(best.v);
  c.iterations_ = best.iterations;
  c.defect_walk_ = 0.0;  // exact by the end-on-u construction
  c.defect_gauss_ = best.defect_gauss;

  // Transport cost E|X-Y|^2 = E|X|^2 + E|Y|^2 - 2 E<X,Y> through the
  // separable kernel.
  {
    const std::size_t n = c.u_.size();
    std::vector<double> vx(n), vy(n), tx(n), ty(n), scratch(n);
    for (int x = -c.radius_; x <= c.radius_; ++x)
      for (int y = -c.radius_; y <= c.radius_; ++y) {
        const std::size_t idx =
            std::size_t(x + c.radius_) * std::size_t(side) + std::size_t(y + c.radius_);
        vx[idx] = c.v_[idx] * double(x);
        vy[idx] = c.v_[idx] * double(y);
      }
    apply_kernel(vx, tx, scratch, side, c.kernel_, c.kernel_w_);
    apply_kernel(vy, ty, scratch, side, c.kernel_, c.kernel_w_);
    double ex2 = 0.0, ey2 = 0.0, cross = 0.0;
    std::vector<double> col(n);
    apply_kernel(c.u_, col, scratch, side, c.kernel_, c.kernel_w_);
    for (int x = -c.radius_; x <= c.radius_; ++x)
      for (int y = -c.radius_; y <= c.radius_; ++y) {
        const std::size_t idx =
            std::size_t(x + c.radius_) * std::size_t(side) + std::size_t(y + c.radius_);
        const double r2 = double(x) * x + double(y) * y;
        ex2 += c.walk_pmf_.p[idx] * r2;
        ey2 += c.v_[idx] * col[idx] * r2;
        cross += c.u_[idx] * (double(x) * tx[idx] + double(y) * ty[idx]);
      }
    c.transport_cost_ = ex2 + ey2 - 2.0 * cross;
  }

  // Alias table over the walk marginal.
  {
    std::vector<double> probs;
    for (int x = -c.radius_; x <= c.radius_; ++x)
      for (int y = -c.radius_; y <= c.radius_; ++y) {
        const double m = c.walk_pmf_.at(x, y);
        if (m > 0.0) {
          probs.push_back(m);
          c.support_.push_back(x);
          c.support_.push_back(y);
        }
      }
    const std::size_t n = probs.size();
    c.alias_accept_.assign(n, 1.0);
    c.alias_index_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = probs[i] * double(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      small.pop_back();
      const auto l = large.back();
      c.alias_accept_[s] = scaled[s];
      c.alias_index_[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
  }

  // Transition tables for the exact conditional bridge.
  {
    c.q_tables_.reserve(std::size_t(block) + 1);
    LatticePmf q0;
    q0.radius = 0;
    q0.p = {1.0};
    c.q_tables_.push_back(q0);
    for (int r = 1; r <= block; ++r) c.q_tables_.push_back(walk_block_pmf(law, r));
  }
  // The coupler keeps its own copy of the law's steps for the bridges.
  for (const auto& e : law.entries()) {
    c.law_steps_.push_back(e.step);
    c.law_probs_.push_back(e.prob);
  }
  return c;
}

std::pair<Vec2i, Vec2i> BlockCoupler::sample_block(RngStream& rng) const {
  // X from the exact walk marginal via the alias table.
  const std::size_t i = std::size_t(rng.below(alias_accept_.size()));
  const double coin = rng.uniform();
  const std::size_t j = (coin < alias_accept_[i]) ? i : alias_index_[i];
  const Vec2i x{support_[2 * j], support_[2 * j + 1]};

  // Y | X = x ~ K(x, .) v(.), supported within the kernel width of x.
  const int side = 2 * radius_ + 1;
  const int lo_x = std::max(-radius_, x.x - kernel_w_), hi_x = std::min(radius_, x.x + kernel_w_);
  const int lo_y = std::max(-radius_, x.y - kernel_w_), hi_y = std::min(radius_, x.y + kernel_w_);
  double total = 0.0;
  for (int yx = lo_x; yx <= hi_x; ++yx) {
    const double kx = kernel_[std::size_t(std::abs(yx - x.x))];
    const std::size_t row = std::size_t(yx + radius_) * std::size_t(side);
    for (int yy = lo_y; yy <= hi_y; ++yy)
      total += kx * kernel_[std::size_t(std::abs(yy - x.y))] * v_[row + std::size_t(yy + radius_)];
  }
  double u = rng.uniform() * total;
  Vec2i y{hi_x, hi_y};
  for (int yx = lo_x; yx <= hi_x && u >= 0.0; ++yx) {
    const double kx = kernel_[std::size_t(std::abs(yx - x.x))];
    const std::size_t row = std::size_t(yx + radius_) * std::size_t(side);
    for (int yy = lo_y; yy <= hi_y; ++yy) {
      u -= kx * kernel_[std::size_t(std::abs(yy - x.y))] * v_[row + std::size_t(yy + radius_)];
      if (u < 0.0) {
        y = {yx, yy};
        break;
      }
    }
  }
  return {x, y};
}

void BlockCoupler::refine_walk_block(Vec2i target, RngStream& rng,
                                     std::vector<Vec2i>& steps) const {
  const int B = block_;
  const std::size_t base = steps.size();
  // Rejection against the unconditional walk.
  for (int attempt = 0; attempt < kRejectionCap; ++attempt) {
    steps.resize(base);
    Vec2i sum{0, 0};
    for (int i = 0; i < B; ++i) {
      // CDF walk; the support is tiny.
      double u = rng.uniform();
      std::size_t idx = law_steps_.size() - 1;
      for (std::size_t q = 0; q < law_probs_.size(); ++q) {
        u -= law_probs_[q];
        if (u < 0.0) {
          idx = q;
          break;
        }
      }
      steps.push_back(law_steps_[idx]);
      sum = sum + law_steps_[idx];
    }
    if (sum == target) return;
  }
  // Exact conditional sampling: P(step = v | remaining sum) ~ p(v) q_{m-1}(rest - v).
  steps.resize(base);
  Vec2i rest = target;
  for (int m = B; m >= 1; --m) {
    const LatticePmf& q = q_tables_[std::size_t(m - 1)];
    double total = 0.0;
    std::vector<double> w(law_steps_.size());
    for (std::size_t q_i = 0; q_i < law_steps_.size(); ++q_i) {
      const Vec2i v = law_steps_[q_i];
      w[q_i] = law_probs_[q_i] * q.at(rest.x - v.x, rest.y - v.y);
      total += w[q_i];
    }
    double u = rng.uniform() * total;
    std::size_t idx = law_steps_.size() - 1;
    for (std::size_t q_i = 0; q_i < w.size(); ++q_i) {
      u -= w[q_i];
      if (u < 0.0) {
        idx = q_i;
        break;
      }
    }
    steps.push_back(law_steps_[idx]);
    rest = rest - law_steps_[idx];
  }
}

void BlockCoupler::refine_gauss_block(Vec2i target, RngStream& rng,
                                      std::vector<std::pair<double, double>>& increments) const {
  const int B = block_;
  const std::size_t base = increments.size();
  double gx_sum = 0.0, gy_sum = 0.0;
  for (int i = 0; i < B; ++i) {
    const double gx = rng.gaussian(), gy = rng.gaussian();
    increments.emplace_back(gx, gy);
    gx_sum += gx;
    gy_sum += gy;
  }
  // Bridge: y_i = target/B + g_i - mean(g); the last increment absorbs the
  // floating drift so the block sum is bit-exact.
  const double mx = gx_sum / B - double(target.x) / B;
  const double my = gy_sum / B - double(target.y) / B;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < B; ++i) {
    auto& inc = increments[base + std::size_t(i)];
    inc.first -= mx;
    inc.second -= my;
    if (i + 1 < B) {
      sx += inc.first;
      sy += inc.second;
    }
  }
  increments[base + std::size_t(B - 1)].first = double(target.x) - sx;
  increments[base + std::size_t(B - 1)].second = double(target.y) - sy;
}

CouplingErrorStats coupling_error_stats(const BlockCoupler& coupler,
                                        const std::vector<std::int64_t>& n_values,
                                        int replicas, std::uint64_t seed,
                                        std::uint64_t stream_base) {
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] % coupler.block() != 0)
      throw std::invalid_argument("coupling_error_stats: n must be a block multiple");
    if (i > 0 && n_values[i] <= n_values[i - 1])
      throw std::invalid_argument("coupling_error_stats: n must ascend");
  }
  const std::int64_t n_max = n_values.back();
  std::vector<RunningStat> sq(n_values.size());

  std::vector<Vec2i> steps;
  std::vector<std::pair<double, double>> incs;
  for (int rep = 0; rep < replicas; ++rep) {
    RngStream rng(seed, stream_base + std::uint64_t(rep));
    steps.clear();
    incs.clear();
    double dx = 0.0, dy = 0.0, running_max_sq = 0.0;
    std::size_t check = 0;
    std::vector<double> max_at(n_values.size(), 0.0);
    for (std::int64_t step = 0; step < n_max;) {
      const auto [bx, by] = coupler.sample_block(rng);
      const std::size_t mark = steps.size();
      coupler.refine_walk_block(bx, rng, steps);
      coupler.refine_gauss_block(by, rng, incs);
      for (int i = 0; i < coupler.block(); ++i, ++step) {
        dx += double(steps[mark + std::size_t(i)].x) - incs[mark + std::size_t(i)].first;
        dy += double(steps[mark + std::size_t(i)].y) - incs[mark + std::size_t(i)].second;
        running_max_sq = std::max(running_max_sq, dx * dx + dy * dy);
        while (check < n_values.size() && step + 1 == n_values[check]) {
          max_at[check] = running_max_sq;
          ++check;
        }
      }
    }
    for (std::size_t i = 0; i < n_values.size(); ++i) sq[i].add(max_at[i]);
  }

  CouplingErrorStats out;
  out.n_values = n_values;
  std::vector<double> lx, ly, lsig;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    const double m2 = sq[i].mean();
    const double d = std::sqrt(m2);
    const double se = (d > 0.0) ? sq[i].std_error() / (2.0 * d) : 0.0;
    out.d_rms.push_back(d);
    out.d_stderr.push_back(se);
    lx.push_back(std::log(double(n_values[i])));
    ly.push_back(std::log(d));
    lsig.push_back(se / d);
  }
  out.exponent = fit_line(lx, ly, lsig);
  return out;
}

}  // namespace rangekit
