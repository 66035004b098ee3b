#include "rangekit/green.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>

#include "rangekit/specfun.hpp"

namespace rangekit {

namespace {

// ---------------------------------------------------------------------------
// FFT helpers (FFTW, complex-to-complex, FFTW_ESTIMATE plans only so that
// results do not depend on run-to-run plan selection).
// ---------------------------------------------------------------------------

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

void fft2d(std::vector<std::complex<double>>& data, int m, int sign) {
  std::unique_lock<std::mutex> lk(fftw_mutex());  // planner is not thread-safe
  fftw_plan plan = fftw_plan_dft_2d(
      m, m, reinterpret_cast<fftw_complex*>(data.data()),
      reinterpret_cast<fftw_complex*>(data.data()), sign, FFTW_ESTIMATE);
  lk.unlock();
  fftw_execute(plan);
  lk.lock();
  fftw_destroy_plan(plan);
}

std::size_t torus_index(Vec2i x, int m) {
  const int ux = ((x.x % m) + m) % m;
  const int uy = ((x.y % m) + m) % m;
  return std::size_t(ux) * std::size_t(m) + std::size_t(uy);
}

// Spectrum of the step law on the m x m torus: real by symmetry.
std::vector<double> law_spectrum(const StepLaw& law, int m) {
  std::vector<std::complex<double>> a(std::size_t(m) * std::size_t(m), 0.0);
  for (const auto& e : law.entries()) a[torus_index(e.step, m)] += e.prob;
  fft2d(a, m, FFTW_FORWARD);
  std::vector<double> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i].real();
  return s;
}

// P(|S_n| leaves the centered box of side m) for all n <= N, Bernstein form,
// per coordinate and unioned; the per-step variance is 1 (identity
// covariance) and steps are bounded by max_step.
double wrap_certificate(std::int64_t n_max, int m, int max_step) {
  const double t = 0.5 * double(m) - double(max_step);
  if (t <= 0) return 1.0;
  const double expo = t * t / (2.0 * (double(n_max) + double(max_step) * t / 3.0));
  return 4.0 * std::exp(-expo);
}

int next_pow2(double v) {
  int m = 64;
  while (double(m) < v) m <<= 1;
  return m;
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1,1], cached per order.
// ---------------------------------------------------------------------------

struct GLRule {
  std::vector<double> x, w;
};

const GLRule& gl_rule(int n) {
  static std::map<int, GLRule> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(static_cast<std::size_t>(n));
  r.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (double(i) + 0.75) / (double(n) + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / double(j + 1);
      }
      const double dp = double(n) * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-15) break;
    }
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * z * p1 - double(j) * p2) / double(j + 1);
    }
    const double dp = double(n) * (z * p0 - p1) / (z * z - 1.0);
    r.x[std::size_t(n - 1 - i)] = z;
    r.w[std::size_t(n - 1 - i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

// ---------------------------------------------------------------------------
// Polar-panel quadrature over [-pi,pi]^2 for even integrands f(p) = f(-p).
// Disc of radius pi: geometric radial panels down to r_min; corner region
// via theta-dependent outer radius pi / max(|cos|,|sin|).
// ---------------------------------------------------------------------------

template <class F>
double integrate_square_polar(F&& f, double r_min, int scale, double osc) {
  // Radial breakpoints: [0, r_min], then geometric with ratio 2 up to pi.
  std::vector<double> bp{0.0, r_min};
  while (bp.back() * 2.0 < kPi) bp.push_back(bp.back() * 2.0);
  bp.push_back(kPi);

  const GLRule& gr = gl_rule(16);
  const GLRule& ga = gl_rule(24);
  double total = 0.0;

  // Disc part, theta in [0, pi) doubled by symmetry.
  for (std::size_t pi_r = 0; pi_r + 1 < bp.size(); ++pi_r) {
    const double a = bp[pi_r], b = bp[pi_r + 1];
    const int rsub = scale;
    // Angular panel count keyed to how oscillatory cos(p.x) is at radius b.
    const int asub = std::max(1, int(std::ceil(b * osc / 6.0))) * scale;
    for (int rs = 0; rs < rsub; ++rs) {
      const double ra = a + (b - a) * rs / rsub;
      const double rb = a + (b - a) * (rs + 1) / rsub;
      for (int as = 0; as < asub; ++as) {
        const double ta = kPi * as / asub;
        const double tb = kPi * (as + 1) / asub;
        double sum = 0.0;
        for (int i = 0; i < 16; ++i) {
          const double r = 0.5 * (ra + rb) + 0.5 * (rb - ra) * gr.x[std::size_t(i)];
          for (int j = 0; j < 24; ++j) {
            const double t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * ga.x[std::size_t(j)];
            sum += gr.w[std::size_t(i)] * ga.w[std::size_t(j)] * r *
                   f(r * std::cos(t), r * std::sin(t));
          }
        }
        total += sum * 0.25 * (rb - ra) * (tb - ta);
      }
    }
  }

  // Corner region: 4 angular panels on [0, pi) split at the pi/4 kinks of
  // the outer radius, radius from pi out to the square boundary.
  for (int seg = 0; seg < 4; ++seg) {
    const double ta0 = kPi * seg / 4.0;
    const double tb0 = kPi * (seg + 1) / 4.0;
    const int asub = std::max(3, int(std::ceil(osc / 3.0))) * scale;
    for (int as = 0; as < asub; ++as) {
      const double ta = ta0 + (tb0 - ta0) * as / asub;
      const double tb = ta0 + (tb0 - ta0) * (as + 1) / asub;
      double sum = 0.0;
      for (int j = 0; j < 24; ++j) {
        const double t = 0.5 * (ta + tb) + 0.5 * (tb - ta) * ga.x[std::size_t(j)];
        const double rb = kPi / std::max(std::fabs(std::cos(t)), std::fabs(std::sin(t)));
        if (rb <= kPi) continue;
        double rsum = 0.0;
        for (int i = 0; i < 16; ++i) {
          const double r = 0.5 * (kPi + rb) + 0.5 * (rb - kPi) * gr.x[std::size_t(i)];
          rsum += gr.w[std::size_t(i)] * r * f(r * std::cos(t), r * std::sin(t));
        }
        sum += ga.w[std::size_t(j)] * rsum * 0.5 * (rb - kPi);
      }
      total += sum * 0.5 * (tb - ta);
    }
  }
  return 2.0 * total;  // f even: integral over theta in [pi, 2pi) matches
}

// Model kernel integral: int_{[-pi,pi]^2} dp / (lambda + |p|^2/2)
//   = 2 pi log(1 + pi^2 / (2 lambda))            (disc, closed polar form)
//   + 8 int_0^{pi/4} log((lambda + pi^2/(2cos^2 t)) / (lambda + pi^2/2)) dt.
double model_kernel_integral(double lambda) {
  const double disc = kTwoPi * std::log1p(kPi * kPi / (2.0 * lambda));
  const GLRule& g = gl_rule(64);
  double corner = 0.0;
  const double a = 0.0, b = kPi / 4.0;
  for (int i = 0; i < 64; ++i) {
    const double t = 0.5 * (a + b) + 0.5 * (b - a) * g.x[std::size_t(i)];
    const double c = std::cos(t);
    corner += g.w[std::size_t(i)] *
              std::log((lambda + kPi * kPi / (2.0 * c * c)) / (lambda + kPi * kPi / 2.0));
  }
  corner *= 0.5 * (b - a) * 8.0;
  return disc + corner;
}

}  // namespace

// ---------------------------------------------------------------------------
// GreenTable
// ---------------------------------------------------------------------------

double GreenTable::at(Vec2i x) const { return values_[torus_index(x, m_)]; }

Bounded GreenTable::mass() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return {s, tail_bound_ + wrap_bound_};
}

Bounded GreenTable::lm_norm(int m) const {
  if (m < 1) throw std::invalid_argument("lm_norm: m >= 1");
  double s = 0.0;
  for (double v : values_) {
    if (v <= 0.0) continue;  // far-field FFT noise floor
    s += std::pow(v, double(m));
  }
  const double value = std::pow(s, 1.0 / double(m));
  // Missing mass is certified; off-torus values are below every on-torus
  // boundary value, so the norm defect is at most missing^(1/m).
  const double missing = tail_bound_ + wrap_bound_;
  return {value, std::pow(missing, 1.0 / double(m))};
}

GreenTable green_series(const StepLaw& law, double lambda, int window_radius,
                        int torus_override) {
  if (!(lambda >= 0.01))
    throw std::invalid_argument("green_series: series route requires lambda >= 0.01");
  GreenTable t;
  t.lambda_ = lambda;
  t.method_ = GreenMethod::series;
  t.window_radius_ = window_radius;

  const double one_minus = -std::expm1(-lambda);
  t.n_trunc_ = std::int64_t(std::ceil(std::log(1.0 / (1e-10 * one_minus)) / lambda));
  t.tail_bound_ = std::exp(-lambda * double(t.n_trunc_ + 1)) / one_minus;

  int m;
  if (torus_override > 0) {
    m = torus_override;
    if ((m & (m - 1)) != 0) throw std::invalid_argument("green_series: torus must be a power of two");
    const double wrap = wrap_certificate(t.n_trunc_, m, law.max_step()) / one_minus;
    if (wrap > 1e-12)
      throw TorusTooSmall("green_series: wrap-around mass not certifiable", wrap);
    t.wrap_bound_ = wrap;
  } else {
    m = next_pow2(std::max(6.0 * std::sqrt(double(t.n_trunc_)) * law.max_step(),
                           8.0 * window_radius));
    while (true) {
      const double wrap = wrap_certificate(t.n_trunc_, m, law.max_step()) / one_minus;
      if (wrap < 1e-12) {
        t.wrap_bound_ = wrap;
        break;
      }
      if (m >= 8192)
        throw TorusTooSmall("green_series: torus would exceed 8192", wrap);
      m <<= 1;
    }
  }
  t.m_ = m;

  const std::vector<double> spec = law_spectrum(law, m);
  std::vector<std::complex<double>> acc(spec.size());
  const double decay = std::exp(-lambda);
  const double n1 = double(t.n_trunc_ + 1);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double a = decay * spec[i];
    // sum_{n=0}^{N} a^n = (1 - a^{N+1}) / (1 - a); |a| <= e^-lambda < 1.
    const double geom = (1.0 - (a >= 0 ? std::pow(a, n1)
                                       : std::pow(-a, n1) * ((t.n_trunc_ + 1) % 2 == 0 ? 1.0 : -1.0))) /
                        (1.0 - a);
    acc[i] = geom;
  }
  fft2d(acc, m, FFTW_BACKWARD);
  t.values_.resize(acc.size());
  const double inv = 1.0 / (double(m) * double(m));
  for (std::size_t i = 0; i < acc.size(); ++i) t.values_[i] = acc[i].real() * inv;

  t.g0_ = t.at({0, 0});
  // Construction-time invariants on the requested window. Sites whose true
  // value sits beneath the inverse-FFT noise floor (far corners at large
  // lambda) are only required to be small, not signed.
  const double noise_floor = 1e-12 * t.g0_;
  for (int x = -window_radius; x <= window_radius; ++x)
    for (int y = -window_radius; y <= window_radius; ++y) {
      const double v = t.at({x, y});
      const double vm = t.at({-x, -y});
      if (v > t.g0_ * (1.0 + 1e-12) ||
          std::fabs(v - vm) > 1e-12 * std::fabs(v) + noise_floor ||
          (v <= 0.0 && std::fabs(v) > noise_floor))
        throw std::runtime_error("green_series: window invariant violated");
    }
  return t;
}

double TransitionTable::at(std::size_t which, Vec2i x) const {
  return tables[which][torus_index(x, torus_m)];
}

TransitionTable transition_table(const StepLaw& law,
                                 const std::vector<std::int64_t>& n_values,
                                 int torus_size) {
  if (torus_size < 2 || (torus_size & (torus_size - 1)) != 0)
    throw std::invalid_argument("transition_table: torus must be a power of two");
  TransitionTable out;
  out.torus_m = torus_size;
  out.n_values = n_values;
  std::int64_t n_max = 0;
  for (auto n : n_values) {
    if (n < 0) throw std::invalid_argument("transition_table: n >= 0");
    n_max = std::max(n_max, n);
  }
  out.wrap_bound = wrap_certificate(n_max, torus_size, law.max_step());
  if (out.wrap_bound > 1e-12)
    throw TorusTooSmall("transition_table: wrap-around mass not certifiable",
                        out.wrap_bound);

  const std::vector<double> spec = law_spectrum(law, torus_size);
  for (auto n : n_values) {
    std::vector<std::complex<double>> acc(spec.size());
    for (std::size_t i = 0; i < spec.size(); ++i) {
      const double a = spec[i];
      acc[i] = (a >= 0 ? std::pow(a, double(n))
                       : std::pow(-a, double(n)) * (n % 2 == 0 ? 1.0 : -1.0));
    }
    fft2d(acc, torus_size, FFTW_BACKWARD);
    std::vector<double> table(acc.size());
    const double inv = 1.0 / (double(torus_size) * double(torus_size));
    for (std::size_t i = 0; i < acc.size(); ++i) table[i] = acc[i].real() * inv;
    out.tables.push_back(std::move(table));
  }
  return out;
}

std::vector<double> transition_origin(const StepLaw& law,
                                      const std::vector<std::int64_t>& n_values,
                                      int torus_size) {
  if (torus_size < 2 || (torus_size & (torus_size - 1)) != 0)
    throw std::invalid_argument("transition_origin: torus must be a power of two");
  std::int64_t n_max = 0;
  for (auto n : n_values) n_max = std::max(n_max, n);
  const double wrap = wrap_certificate(n_max, torus_size, law.max_step());
  if (wrap > 1e-12)
    throw TorusTooSmall("transition_origin: wrap-around mass not certifiable", wrap);
  const std::vector<double> spec = law_spectrum(law, torus_size);
  std::vector<double> out;
  for (auto n : n_values) {
    double s = 0.0;
    for (double a : spec)
      s += (a >= 0 ? std::pow(a, double(n))
                   : std::pow(-a, double(n)) * (n % 2 == 0 ? 1.0 : -1.0));
    out.push_back(s / (double(torus_size) * double(torus_size)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fourier route and c_X
// ---------------------------------------------------------------------------

Bounded green_fourier(const StepLaw& law, double lambda, Vec2i x, double tol) {
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("green_fourier: 0 < lambda < 1");
  const double decay = std::exp(-lambda);
  const double one_minus = -std::expm1(-lambda);
  const double xr = std::hypot(double(x.x), double(x.y));

  // Remainder after subtracting the model kernel: bounded near p = 0, with
  // structure on the sqrt(lambda) scale that the graded panels resolve.
  auto rem = [&](double px, double py) {
    const double d = one_minus + decay * law.one_minus_char_fn(px, py);
    const double model = lambda + 0.5 * (px * px + py * py);
    return std::cos(px * x.x + py * x.y) / d - 1.0 / model;
  };

  const double r_min = std::max(std::sqrt(lambda), 1e-8) / 8.0;
  const double closed = model_kernel_integral(lambda);

  double prev = 0.0, cur = 0.0, gap = 0.0;
  for (int level = 0; level < 3; ++level) {
    const int scale = 1 << level;
    cur = integrate_square_polar(rem, r_min, scale, xr + 3.0);
    if (level > 0) {
      gap = std::fabs(cur - prev);
      if (gap <= tol)
        return {(closed + cur) / (kTwoPi * kTwoPi), gap / (kTwoPi * kTwoPi)};
    }
    prev = cur;
  }
  throw QuadratureNotConverged("green_fourier: refinements did not settle", gap);
}

CxEstimate c_x(const StepLaw& law, double tol) {
  // g_lambda - (1/2pi) log(1/lambda) converges to
  //   (1/2pi) log(pi^2/2)                   [disc part of the model kernel]
  // + (log 2)/pi - 2 G_catalan / pi^2       [square-minus-disc part: the
  //     integral of 2/|p|^2 over [-pi,pi]^2 \ D(0,pi) is 4 pi log 2 - 8 G]
  // + (2pi)^-2 int (phi - 1 + |p|^2/2) / ((1 - phi) |p|^2/2) dp.
  // The numerator of the law-dependent integrand is evaluated in its
  // cancellation-free form; at the origin the ratio tends to an angular
  // constant, so polar grading integrates it cleanly.
  constexpr double kCatalan = 0.91596559417721901505460351493238411;
  auto f = [&](double px, double py) {
    const double num = law.char_fn_quartic_rem(px, py);
    const double den = law.one_minus_char_fn(px, py) * 0.5 * (px * px + py * py);
    return num / den;
  };
  const double r_min = 1e-8 / 8.0;
  CxEstimate out;
  double prev = 0.0, gap = 0.0;
  for (int level = 0; level < 3; ++level) {
    const int scale = 1 << level;
    const double J = integrate_square_polar(f, r_min, scale, 3.0);
    out.refinement_levels = level + 1;
    if (level > 0) {
      gap = std::fabs(J - prev);
      if (gap <= tol * (kTwoPi * kTwoPi)) {
        out.value = std::log(kPi * kPi / 2.0) / kTwoPi + std::log(2.0) / kPi -
                    2.0 * kCatalan / (kPi * kPi) + J / (kTwoPi * kTwoPi);
        out.bound = gap / (kTwoPi * kTwoPi);
        return out;
      }
    }
    prev = J;
  }
  throw QuadratureNotConverged("c_x: refinements did not settle", gap);
}

// ---------------------------------------------------------------------------
// Resolvent residual and difference tables
// ---------------------------------------------------------------------------

Bounded green_resolvent_residual(const GreenTable& a, const GreenTable& b,
                                 int radius, bool asymptotic_form) {
  if (a.torus_m() != b.torus_m())
    throw std::invalid_argument("resolvent: tables must share a torus");
  const int m = a.torus_m();
  if (radius > m / 2 - 1) throw WindowExceeded("resolvent: radius beyond torus");

  std::vector<std::complex<double>> fa(a.values_.begin(), a.values_.end());
  std::vector<std::complex<double>> fb(b.values_.begin(), b.values_.end());
  fft2d(fa, m, FFTW_FORWARD);
  fft2d(fb, m, FFTW_FORWARD);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  fft2d(fa, m, FFTW_BACKWARD);
  const double inv = 1.0 / (double(m) * double(m));

  const double la = a.lambda(), lb = b.lambda();
  const double ca = asymptotic_form ? 1.0 : std::exp(-la);
  const double cb = asymptotic_form ? 1.0 : std::exp(-lb);
  const double cc = asymptotic_form ? (lb - la) : (std::exp(-la) - std::exp(-lb));

  double worst = 0.0;
  for (int xx = -radius; xx <= radius; ++xx)
    for (int yy = -radius; yy <= radius; ++yy) {
      const std::size_t idx = torus_index({xx, yy}, m);
      const double conv = fa[idx].real() * inv;
      const double r = ca * a.values_[idx] - cb * b.values_[idx] - cc * conv;
      worst = std::max(worst, std::fabs(r));
    }

  const double mass_a = a.mass().value, mass_b = b.mass().value;
  const double tail_a = a.tail_bound() + a.wrap_bound();
  const double tail_b = b.tail_bound() + b.wrap_bound();
  const double bound = tail_a + tail_b + std::fabs(cc) * (mass_a * tail_b + mass_b * tail_a);
  return {worst, bound};
}

double DiffGreenTable::at(Vec2i x) const {
  if (std::abs(x.x) > radius || std::abs(x.y) > radius)
    throw WindowExceeded("diff_green: site outside window");
  const int side = 2 * radius + 1;
  return values[std::size_t(x.x + radius) * std::size_t(side) + std::size_t(x.y + radius)];
}

double DiffGreenTable::lm_norm(int m) const {
  double s = 0.0;
  for (double v : values) s += std::pow(std::fabs(v), double(m));
  return std::pow(s, 1.0 / double(m));
}

DiffGreenTable diff_green(const GreenTable& table, Vec2i z, int radius) {
  const int m = table.torus_m();
  if (radius + std::max(std::abs(z.x), std::abs(z.y)) > m / 2 - 1)
    throw WindowExceeded("diff_green: shift leaves the torus window");
  DiffGreenTable d;
  d.shift = z;
  d.radius = radius;
  const int side = 2 * radius + 1;
  d.values.resize(std::size_t(side) * std::size_t(side));
  for (int x = -radius; x <= radius; ++x)
    for (int y = -radius; y <= radius; ++y)
      d.values[std::size_t(x + radius) * std::size_t(side) + std::size_t(y + radius)] =
          table.at({x + z.x, y + z.y}) - table.at({x, y});
  return d;
}

}  // namespace rangekit
