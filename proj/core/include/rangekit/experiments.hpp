#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rangekit/step_law.hpp"

namespace rangekit {

/// Declarative Monte Carlo experiment configuration. Two runs with equal
/// specs produce identical estimate and CSV bytes (replica-indexed rng
/// streams, order-independent merges), regardless of the worker count.
struct ExperimentSpec {
  std::string name;
  std::string law_file;  // empty: built-in reference law
  std::uint64_t seed = 0x52414e47u;
  int workers = 0;       // 0: hardware concurrency
  std::string out_dir;   // empty: no files written

  std::vector<std::int64_t> n_list;   // walk horizons
  std::vector<double> lambda_list;    // killing rates
  int replicas = 0;                   // 0: experiment default
  double h = 1e-4;                    // Brownian grid
  double horizon = 1.0;               // Brownian horizon T
  std::vector<double> eps_factors{16.0, 8.0, 4.0};  // eps = factor * h
  int k = 2;                          // order
  int paths = 0;                      // Brownian paths; 0: default
  std::vector<int> blocks{1, 16, 64};
  std::vector<std::int64_t> coupling_n{256, 512, 1024, 2048, 4096};
  int window = 10;                    // lattice window radius

  StepLaw law() const;
  std::uint64_t hash() const;
  std::string to_json() const;
};

struct Estimate {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;  // or a deterministic bound; never absent
  std::int64_t n_samples = 0;
};

struct Verdict {
  std::string criterion;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ExperimentResult {
  std::string experiment;
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  std::vector<Estimate> estimates;
  std::vector<Verdict> verdicts;
  double runtime_s = 0.0;
  std::vector<std::string> files;  // artifacts written (csv, json)

  bool passed() const;
  const Estimate& estimate(const std::string& name) const;
  std::string to_json(const ExperimentSpec& spec) const;
};

/// Replica-parallel map: body(replica_index) runs on a pool of `workers`
/// threads; bodies must write only to replica-indexed slots.
void for_each_replica(int replicas, int workers, const std::function<void(int)>& body);

/// Flat key = value config file (# comments). Values override spec fields
/// through apply_config.
std::map<std::string, std::string> parse_config(const std::string& path);
void apply_config(ExperimentSpec& spec, const std::map<std::string, std::string>& kv);

// --- experiments -------------------------------------------------------------

/// Range growth law: E|R(n)|/n against the expansion predictions
/// P_k(n) = sum_{j<=k} (-1)^{j-1} gt^{-j} E gamma_j(1), gt = (1/2pi)log n + c_X.
ExperimentResult run_range_law(const ExperimentSpec& spec);

/// Killed range: MC mean of |R(zeta_lambda)| against the exact value
/// 1/((1-e^-lambda) g_lambda), plus the scaled variance of the truncated
/// expansion bracket at orders 1 and 2 along lambda.
ExperimentResult run_killed_range(const ExperimentSpec& spec);

/// Second-order fluctuations: walk statistic (log n)^2 (|R| - mean)/n at
/// n = 2^20 against independent samples of -(2pi)^2 gamma_2(1).
ExperimentResult run_clt_second_order(const ExperimentSpec& spec);

/// Exact and closed-form identity bundle: truncated binomial series,
/// counter-term transform round trip, two-route rescaling, pathwise alpha
/// scaling, Green mass / resolvent, hitting probability.
ExperimentResult run_identity_suite(const ExperimentSpec& spec);

/// Offset-renormalization deviation E|l Gbar_2(zeta,y) - l Gamma_2(zeta)|^2
/// across |y| in {lambda^0.4, lambda^0.3, lambda^0.2} (lattice-quantized).
ExperimentResult run_hoelder_trend(const ExperimentSpec& spec);

/// Block coupling contract: marginal GOF and error-exponent ordering.
ExperimentResult run_coupling(const ExperimentSpec& spec);

/// Brownian gamma sampler CSV (path_seed, k, eps, alpha, gamma_level,
/// gamma_extrapolated) plus mean-level verdicts.
ExperimentResult run_gamma(const ExperimentSpec& spec);

/// Green table / c_X emitters for the CLI.
ExperimentResult run_green_table(const ExperimentSpec& spec, double lambda,
                                 const std::string& method);
ExperimentResult run_cx(const ExperimentSpec& spec);

// --- acceptance --------------------------------------------------------------

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double runtime_s = 0.0;
  std::vector<std::string> detail;  // one line per measured quantity
};

struct AcceptanceCriterion {
  int id;
  std::string name;
  double budget_s;  // stated runtime budget
  std::function<CriterionResult(const ExperimentSpec&)> run;
};

/// The registered acceptance suite, ids 1..11.
const std::vector<AcceptanceCriterion>& acceptance_suite();

/// Runs the requested criteria (all when ids is empty); prints one
/// "PASS|FAIL  <id>  <name>" line per criterion to stdout, writes the JSON
/// summary when out_dir is set, and returns the overall success flag.
bool run_all(const ExperimentSpec& base, const std::vector<int>& ids = {});

/// Independent quadrature of the defining integrals (adaptive Simpson on a
/// compactified axis); used as the oracle for the closed forms u_eps / u1.
/// Shares no code with expint_e1 / bessel_k0.
double u_eps_reference(double eps);
double u_one_reference(double yx, double yy);

}  // namespace rangekit
