// Command-line front end: every experiment is a subcommand sharing the
// global law/seed/workers/out/config flags.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

#include "rangekit/experiments.hpp"
#include "rangekit/step_law.hpp"

namespace {

void print_summary(const rangekit::ExperimentResult& r) {
  std::printf("experiment %s  (%.2f s)\n", r.experiment.c_str(), r.runtime_s);
  for (const auto& e : r.estimates)
    std::printf("  %-42s %.10g  (+- %.3g, n=%lld)\n", e.name.c_str(), e.value,
                e.std_error, (long long)e.n_samples);
  for (const auto& v : r.verdicts)
    std::printf("  [%s] %-40s measured %.6g vs %.6g %s\n", v.pass ? "pass" : "FAIL",
                v.criterion.c_str(), v.measured, v.threshold, v.detail.c_str());
  for (const auto& f : r.files) std::printf("  wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rangekit: planar random-walk range, intersection local times, "
               "lattice Green's functions, and walk/Brownian coupling experiments"};
  app.set_help_flag("--help", "print help");  // frees -h for the time-step flag
  app.require_subcommand(1);

  rangekit::ExperimentSpec spec;
  std::string config_file;
  app.add_option("--law", spec.law_file, "step law file (default: built-in reference law)");
  app.add_option("--seed", spec.seed, "base seed");
  app.add_option("--workers", spec.workers, "worker threads (0 = hardware)");
  app.add_option("--out", spec.out_dir, "output directory for CSV/JSON");
  app.add_option("--config", config_file, "flat key = value config file");

  auto* range = app.add_subcommand("range", "range growth law vs expansion predictions");
  range->fallthrough();
  std::vector<std::int64_t> n_list;
  range->add_option("--n", n_list, "walk horizons");
  range->add_option("--replicas", spec.replicas, "replicas at the largest horizon");

  auto* killed = app.add_subcommand("killed-range", "killed-range exact mean and expansion decay");
  killed->fallthrough();
  std::vector<double> lambdas;
  killed->add_option("--lambda", lambdas, "killing rates");
  killed->add_option("--replicas", spec.replicas, "replicas per rate");

  auto* clt = app.add_subcommand("clt", "second-order fluctuation comparison");
  clt->fallthrough();
  clt->add_option("--n", n_list, "walk horizon (first entry)");
  clt->add_option("--replicas", spec.replicas, "walk replicas");
  clt->add_option("--paths", spec.paths, "Brownian paths");

  auto* ident = app.add_subcommand("identities", "exact/closed-form identity bundle");
  ident->fallthrough();
  ident->add_option("--replicas", spec.replicas, "MC replicas for the hitting part");
  ident->add_option("--paths", spec.paths, "paths for the two-route rescaling");

  auto* hoelder = app.add_subcommand("hoelder", "offset-renormalization deviation trend");
  hoelder->fallthrough();
  hoelder->add_option("--lambda", lambdas, "killing rates");
  hoelder->add_option("--replicas", spec.replicas, "replicas per rate");

  auto* green = app.add_subcommand("green", "Green's function table");
  green->fallthrough();
  double lambda = 0.05;
  std::string method = "series";
  green->add_option("--lambda", lambda, "killing rate")->required();
  green->add_option("--method", method, "series|fourier");
  green->add_option("--window", spec.window, "window radius");

  auto* cx = app.add_subcommand("cx", "law constant c_X by quadrature");
  cx->fallthrough();

  auto* gamma = app.add_subcommand("gamma", "renormalized Brownian intersection local times");
  gamma->fallthrough();
  gamma->add_option("--h", spec.h, "time step");
  gamma->add_option("--T", spec.horizon, "horizon");
  gamma->add_option("--k", spec.k, "order");
  gamma->add_option("--paths", spec.paths, "path count");
  std::vector<double> eps_factors;
  gamma->add_option("--eps-schedule", eps_factors, "eps levels as multiples of h");

  auto* couple = app.add_subcommand("couple", "block coupling contract");
  couple->fallthrough();
  std::vector<int> blocks;
  couple->add_option("--block", blocks, "block sizes");
  couple->add_option("--n", spec.coupling_n, "checkpoints (block multiples)");
  couple->add_option("--replicas", spec.replicas, "replicas");

  auto* all = app.add_subcommand("all", "run the registered acceptance suite");
  all->fallthrough();
  std::vector<int> ids;
  all->add_option("--criterion", ids, "criterion ids (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_file.empty()) rangekit::apply_config(spec, rangekit::parse_config(config_file));
    if (!n_list.empty()) spec.n_list = n_list;
    if (!lambdas.empty()) spec.lambda_list = lambdas;
    if (!blocks.empty()) spec.blocks = blocks;
    if (!eps_factors.empty()) spec.eps_factors = eps_factors;
    if (!spec.out_dir.empty()) std::filesystem::create_directories(spec.out_dir);

    rangekit::ExperimentResult result;
    if (*range) result = rangekit::run_range_law(spec);
    else if (*killed) result = rangekit::run_killed_range(spec);
    else if (*clt) result = rangekit::run_clt_second_order(spec);
    else if (*ident) result = rangekit::run_identity_suite(spec);
    else if (*hoelder) result = rangekit::run_hoelder_trend(spec);
    else if (*green) result = rangekit::run_green_table(spec, lambda, method);
    else if (*cx) result = rangekit::run_cx(spec);
    else if (*gamma) result = rangekit::run_gamma(spec);
    else if (*couple) result = rangekit::run_coupling(spec);
    else if (*all) return rangekit::run_all(spec, ids) ? 0 : 1;

    print_summary(result);
    return result.passed() ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
