#pragma once

// Command-line front door: one subcommand per experiment, each writing a CSV
// table and a JSON summary into the output directory.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 acceptance check failed (with --check / --check-fd, or selftest).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfn/model.hpp"
#include "cfn/report.hpp"
#include "cfn/tree.hpp"

namespace cfn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCheck = 3;

struct RunConfig {
  std::string command;
  std::string tree;  // path, or caterpillar:N, complete:D, random:N[:SEED], spine:L:D, quartet
  std::string format = "edge-list";
  RegimeBox box;
  std::vector<double> deltas;  // per-command default when empty
  std::optional<std::size_t> m;
  std::uint64_t seed = 1;
  std::string mode = "exact";
  std::string out = "cfn-out";
  int threads = 0;
  bool check = false;
  bool check_fd = false;
  // Experiment knobs.
  double grid_step = 0.05;
  double k_good = 10.0;
  double c_severe = 0.5;
  double good_multiplier = 1.0;
  double tol = 1e-13;
  std::optional<int> sweeps;  // 200 for cd, 5000 for pga
  std::string theta_hat = "truth";
  std::string method = "cd";
  std::optional<double> step;
  bool widen = false;
  std::string samples;  // sample file for loglik / fit
  std::string node;
  std::string parent;
  std::vector<int> pair;
  std::optional<double> band_k;
  std::size_t dominance_samples = 1000;
  std::string dominance_tree = "caterpillar:16";
  std::string sup = "closed-form";
  int sup_grid = 2001;
  std::size_t trials = 20000;
};

Json config_json(const RunConfig& cfg);

// Resolves a tree source. Generated sources carry no edge values.
LoadedTree resolve_tree(const std::string& source, TreeFormat format);

int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace cfn
