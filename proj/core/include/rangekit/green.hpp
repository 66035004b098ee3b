#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rangekit/lattice.hpp"
#include "rangekit/step_law.hpp"

namespace rangekit {

/// A numeric value together with a deterministic error bound. No bare
/// floats cross this module's boundary.
struct Bounded {
  double value = 0.0;
  double bound = 0.0;
};

class TorusTooSmall : public std::runtime_error {
 public:
  TorusTooSmall(const std::string& what, double bound)
      : std::runtime_error(what), wrap_bound(bound) {}
  const double wrap_bound;
};

class QuadratureNotConverged : public std::runtime_error {
 public:
  QuadratureNotConverged(const std::string& what, double gap)
      : std::runtime_error(what), last_gap(gap) {}
  const double last_gap;
};

class WindowExceeded : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GreenMethod { series, fourier };

/// Killed lattice Green's function G_lambda(x) = sum_n e^{-lambda n} q_n(x)
/// tabulated on a periodic torus large enough that wrap-around mass is
/// certified below 1e-12. Values are exact up to the reported truncation
/// tail and wrap bound.
class GreenTable {
 public:
  double lambda() const { return lambda_; }
  int torus_m() const { return m_; }
  std::int64_t truncation() const { return n_trunc_; }
  double tail_bound() const { return tail_bound_; }
  double wrap_bound() const { return wrap_bound_; }
  GreenMethod method() const { return method_; }
  int window_radius() const { return window_radius_; }

  double g0() const { return g0_; }
  double at(Vec2i x) const;  // torus-wrapped lookup

  /// Sum over the torus plus its certificate (truncation + wrap).
  Bounded mass() const;

  /// (sum_x G^m)^(1/m) over the torus; bound covers the missing off-torus
  /// tail, estimated from the certified missing mass.
  Bounded lm_norm(int m) const;

 private:
  friend GreenTable green_series(const StepLaw&, double, int, int);
  friend Bounded green_resolvent_residual(const GreenTable&, const GreenTable&,
                                          int, bool);
  double lambda_ = 0.0;
  int m_ = 0;
  int window_radius_ = 0;
  std::int64_t n_trunc_ = 0;
  double tail_bound_ = 0.0;
  double wrap_bound_ = 0.0;
  double g0_ = 0.0;
  GreenMethod method_ = GreenMethod::series;
  std::vector<double> values_;  // m_ x m_, wrapped coordinates
};

/// Series/FFT route: valid for lambda >= 0.01 (the term count is ~1/lambda).
/// Truncation N satisfies e^{-lambda N} / (1 - e^{-lambda}) < 1e-10; the
/// torus side starts at the diffusive rule 6 sqrt(N) * max_step and doubles
/// until the Bernstein wrap certificate clears 1e-12. `torus_override`
/// forces a side (power of two) and throws TorusTooSmall if uncertifiable.
GreenTable green_series(const StepLaw& law, double lambda, int window_radius,
                        int torus_override = 0);

/// Transition probabilities q_n on the torus for each requested n, by
/// spectral powers of the step characteristic function.
struct TransitionTable {
  int torus_m = 0;
  std::vector<std::int64_t> n_values;
  std::vector<std::vector<double>> tables;  // one m x m table per n
  double wrap_bound = 0.0;
  double at(std::size_t which, Vec2i x) const;
};

TransitionTable transition_table(const StepLaw& law,
                                 const std::vector<std::int64_t>& n_values,
                                 int torus_size);

/// q_n(0) for each n without materializing tables (mean of spectrum^n).
std::vector<double> transition_origin(const StepLaw& law,
                                      const std::vector<std::int64_t>& n_values,
                                      int torus_size);

/// Fourier route: G_lambda(x) = (2pi)^-2 int cos(p.x) / (1 - e^-lambda phi(p)) dp
/// over [-pi,pi]^2, evaluated by subtracting the model kernel 1/(lambda+|p|^2/2)
/// whose square integral has a closed polar form, and integrating the smooth
/// remainder on geometrically graded polar panels. The bound is the gap
/// between two refinement levels; exceeding `tol` after refinement throws
/// QuadratureNotConverged.
Bounded green_fourier(const StepLaw& law, double lambda, Vec2i x, double tol = 1e-8);

/// The law-dependent constant in g_lambda = (1/2pi) log(1/lambda) + c_X + o(1):
///   c_X = (1/2pi) log(pi^2/2) + (log 2)/pi - 2 G_catalan / pi^2
///       + (2pi)^-2 int (phi - 1 + |p|^2/2) / ((1 - phi) |p|^2/2) dp,
/// the first three terms being the lambda-free part of the model-kernel
/// integral over the square (disc plus corner region) and the integral the
/// law-dependent remainder. Evaluated by graded polar quadrature, fully
/// independent of the series and Fourier Green routes.
struct CxEstimate {
  double value = 0.0;
  double bound = 0.0;       // refinement gap
  int refinement_levels = 0;
};

CxEstimate c_x(const StepLaw& law, double tol = 1e-8);

/// Residual of the discrete resolvent equation on |x|_inf <= radius:
///   e^-l G_l - e^-l' G_l' = (e^-l - e^-l') (G_l * G_l')
/// (convolution over the torus). With `asymptotic_form` the residual of the
/// small-lambda shape G_l - G_l' = (l' - l)(G_l * G_l') is measured instead;
/// that form carries an O(lambda) model error and is reported for diagnosis,
/// not asserted.
Bounded green_resolvent_residual(const GreenTable& a, const GreenTable& b,
                                 int radius, bool asymptotic_form = false);

/// Difference-operator table D_z G(x) = G(x+z) - G(x) on |x|_inf <= radius,
/// with its l_m norms for the scaling diagnostics.
struct DiffGreenTable {
  Vec2i shift;
  int radius = 0;
  std::vector<double> values;  // (2r+1)^2 row-major
  double at(Vec2i x) const;
  double lm_norm(int m) const;
};

DiffGreenTable diff_green(const GreenTable& table, Vec2i z, int radius);

}  // namespace rangekit
