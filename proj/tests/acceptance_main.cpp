// Acceptance gate: runs the registered criteria and prints one pass/fail
// line each. Exit code 0 only when every requested criterion passes.

#include <cstdio>
#include <filesystem>
#include <cstring>
#include <string>
#include <vector>

#include "rangekit/experiments.hpp"

int main(int argc, char** argv) {
  rangekit::ExperimentSpec base;
  base.seed = 0x52414e47;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      ids.push_back(std::atoi(argv[++i]));
    } else if (std::strcmp(argv[i], "--out") == 0 && i + 1 < argc) {
      base.out_dir = argv[++i];
    } else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc) {
      base.seed = std::strtoull(argv[++i], nullptr, 0);
    } else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) {
      base.workers = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr,
                   "usage: acceptance [--criterion N]... [--seed S] [--workers W] [--out DIR]\n");
      return 2;
    }
  }
  if (!base.out_dir.empty()) std::filesystem::create_directories(base.out_dir);
  return rangekit::run_all(base, ids) ? 0 : 1;
}
