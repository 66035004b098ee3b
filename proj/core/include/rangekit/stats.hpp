#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace rangekit {

/// Streaming mean / variance (Welford). Merging two accumulators is
/// associative, so replica results can be reduced in a fixed order.
class RunningStat {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / double(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStat& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double d = o.mean_ - mean_;
    const double nn = double(n_ + o.n_);
    m2_ += o.m2_ + d * d * double(n_) * double(o.n_) / nn;
    mean_ += d * double(o.n_) / nn;
    n_ += o.n_;
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }
  double stddev() const;
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
/// Inputs need not be sorted.
double ks_distance(std::vector<double> a, std::vector<double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
  std::size_t bins = 0;
};

/// Pearson chi-square goodness of fit of observed counts against expected
/// counts (same length, expected scaled to the observed total). Cells with
/// expected count below `min_expected` are pooled into one bin.
ChiSquareResult chi_square_gof(const std::vector<double>& observed,
                               const std::vector<double>& expected,
                               double min_expected = 5.0);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // from per-point errors if given, else residuals
};

/// Least squares y = a + b x. If `sigma` is nonempty it gives per-point
/// standard errors and the fit is weighted 1/sigma^2 with the slope SE
/// propagated from them; otherwise ordinary LS with residual-based SE.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma = {});

struct Extrapolation {
  std::vector<double> levels;   // raw values, coarsest first
  double value = 0.0;           // extrapolated estimate
  double last_gap = 0.0;        // |levels.back() - previous|
  bool converged = true;        // false when the Aitken denominator is unusable
};

/// Aitken delta-squared extrapolation of the final three levels; assumes
/// value(i) ~ limit + A r^i. Degenerate differences fall back to the last
/// level with converged = false.
Extrapolation aitken(const std::vector<double>& levels);

}  // namespace rangekit
