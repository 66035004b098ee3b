#pragma once

namespace rangekit::tol {

// Every statistical and numerical threshold used by the experiment verdicts
// and the acceptance suite lives here; nothing is scattered in run code.

// --- Green's function identities -------------------------------------------
inline constexpr double kGreenCrossAgreement = 1e-6;   // series vs Fourier, lambda 0.05, |x| <= 10
inline constexpr double kGreenResolvent = 1e-6;        // discrete resolvent residual
inline constexpr double kGreenAsymptote = 5e-3;        // |(g - log/2pi) - c_X| at lambda 1e-5
inline constexpr double kQuadratureTol = 1e-8;         // Fourier-route refinement gap

// --- Monte Carlo identity bands (multiples of the standard error) ----------
inline constexpr double kIdentitySigma = 3.0;          // killed-range mean, hitting, gamma_2 mean
inline constexpr double kMomentSigma = 4.0;            // sampling moment checks

// --- Brownian anchors -------------------------------------------------------
inline constexpr double kSpecialFnQuadrature = 1e-8;   // u_eps / u1 closed form vs integral
inline constexpr double kRenormRoundTrip = 1e-12;      // counter-term transform, k <= 6
// Two-route rescaling check: per-path allowance combining both Aitken gaps
// with a floor for the finite-eps counter-term drift (the eps levels are
// tied to the grid, so the drift scales with h log h).
inline constexpr double kRescaleGapFactor = 2.0;
inline constexpr double kRescaleFloor = 5e-3;
inline constexpr double kAlphaRescaleIdentity = 1e-12; // pathwise change of variables
inline constexpr double kRecursionVsBrute = 1e-10;     // relative
inline constexpr double kGridVsRecursion = 2e-5;       // relative, cutoff + table interpolation

// --- Expansion and CLT surrogates -------------------------------------------
inline constexpr double kRangeLawRelErr = 0.02;        // MC mean vs second-order prediction
inline constexpr double kCltRelErr = 0.25;             // means and standard deviations
inline constexpr double kCltKs = 0.15;                 // two-sample KS distance

// --- Coupling contract -------------------------------------------------------
inline constexpr double kMarginalTolL1 = 1e-9;         // Sinkhorn marginal defect
inline constexpr double kGofPValue = 0.01;             // chi-square on sampled marginals
inline constexpr double kExponentSigma = 2.0;          // block-size exponent separation

// --- Series identity ---------------------------------------------------------
// Truncated binomial series vs (1-x)^-m: gap <= 2 x^{k-m+1} on the m = 1
// grid (where that constant provably holds for x <= 0.4); for m >= 2 the
// leading omitted term carries C(k, m-1), so the reported bound scales by it.
inline constexpr double kSeriesGapFactor = 2.0;

}  // namespace rangekit::tol
