// Acceptance suite: one PASS/FAIL line per criterion, each with its measured
// values, the required tolerance and the runtime against its limit.
//
//   acceptance          run all criteria
//   acceptance 4 7      run only criteria 4 and 7

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cfn/claims.hpp"
#include "cfn/cli.hpp"
#include "cfn/kernels.hpp"
#include "cfn/landscape.hpp"
#include "cfn/likelihood.hpp"
#include "cfn/optimize.hpp"
#include "cfn/report.hpp"

namespace {

using namespace cfn;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;  // 0: no limit
  std::function<Outcome()> run;
};

std::string fmt(double x, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::pair<EdgeId, EdgeId> farthest_pair(const Tree& tree) {
  std::pair<EdgeId, EdgeId> best{0, 1};
  int dist = -1;
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    for (EdgeId f = e + 1; f < tree.edge_count(); ++f) {
      const int d = edge_distance(tree, e, f);
      if (d > dist) {
        dist = d;
        best = {e, f};
      }
    }
  }
  return best;
}

// 1. Analytic gradient and Hessian against finite-difference oracles.
Outcome derivative_correctness() {
  constexpr int kTriples = 140;
  const double deltas[] = {0.1, 0.05, 0.02, 0.01};
  double g_worst = 0.0, h_worst = 0.0, h_plain = 0.0;
  int compared = 0;
  for (int t = 0; t < kTriples; ++t) {
    const int n = 2 + t % 7;
    const Tree tree = make_random_tree(n, 100 + t);
    RegimeBox box;
    box.delta = deltas[t % 4];
    const auto truth = sample_edge_params(tree, box, Role::kTruth, 200 + t).theta;
    const auto theta = sample_edge_params(tree, box, Role::kEstimate, 300 + t).theta;
    const auto batch = sample_batch(tree, truth, 1 + t % 25, 400 + t);
    const auto patterns = batch_patterns(batch);
    const auto g = evaluate(tree, theta, patterns, Quantity::kGradient).value;
    const auto h = evaluate(tree, theta, patterns, Quantity::kHessian).value;
    const auto fd = fd_oracle(tree, theta, patterns);
    const auto ml = multilinear_oracle(tree, theta, patterns);
    g_worst = std::max(g_worst, compare_relative(g, fd.gradient).max_relative);
    const auto hd = compare_relative(h, ml.hessian.data());
    h_worst = std::max(h_worst, hd.max_relative);
    h_plain = std::max(h_plain, compare_relative(h, fd.hessian.data()).max_relative);
    compared += static_cast<int>(hd.compared);
  }
  return {g_worst < 1e-6 && h_worst < 1e-5,
          std::to_string(kTriples) + " triples n=2..8; gradient rel " + fmt(g_worst) +
              " (< 1e-6), hessian rel " + fmt(h_worst) + " over " + std::to_string(compared) +
              " entries > 1e-8 (< 1e-5); plain central-difference hessian rel " + fmt(h_plain)};
}

// 2. Expected score vanishes at theta-hat = theta*.
Outcome score_identity() {
  double worst = 0.0;
  const Tree trees[] = {make_caterpillar(4), make_random_tree(6, 17)};
  const double deltas[] = {0.05, 0.02, 0.01, 0.005};
  int draws = 0;
  for (const auto& tree : trees) {
    for (int s = 0; s < 20; ++s) {
      RegimeBox box;
      box.delta = deltas[s % 4];
      const auto theta = sample_edge_params(tree, box, Role::kTruth, 500 + s).theta;
      for (double x : expected_exact(tree, theta, theta, Quantity::kGradient).value) {
        worst = std::max(worst, std::fabs(x));
      }
      ++draws;
    }
  }
  return {worst < 1e-12, std::to_string(draws) + " draws on the quartet and a 6-leaf tree; max |E grad| " +
                             fmt(worst) + " (< 1e-12)"};
}

// 3. Diagonal entries scale like -1/delta.
Outcome diagonal_scaling() {
  HessianConfig hc;
  hc.mode = EvalMode::kExact;
  hc.theta_hat = ThetaHatMode::kTruth;
  const std::vector<double> deltas{0.02, 0.01, 0.005};
  const auto rep = diag_scaling_experiment(make_caterpillar(4), hc, deltas);
  bool negative = true;
  for (const auto& r : rep.rows) negative = negative && r.all_negative;
  const bool slope_ok = rep.min_slope >= -1.15 && rep.max_slope <= -0.85;
  return {negative && slope_ok, std::string("all diagonals negative: ") + (negative ? "yes" : "no") +
                                    "; slopes in [" + fmt(rep.min_slope) + ", " +
                                    fmt(rep.max_slope) + "] (-1 +/- 0.15)"};
}

// 4. Diagonal dominance, negative spectrum, eigenvalues inside Gershgorin disks.
Outcome offdiag_concavity() {
  HessianConfig hc;
  hc.box.delta = 0.01;
  hc.mode = EvalMode::kExact;
  const auto rep = hessian_report(make_caterpillar(12), hc);
  const bool ok = rep.diagonally_dominant && rep.eigenvalues.back() < 0.0 && rep.eigen_in_disks;
  return {ok, std::string("12-leaf caterpillar, delta 0.01: dominant rows ") +
                  (rep.diagonally_dominant ? "all" : "NOT all") + "; lambda in [" +
                  fmt(rep.eigenvalues.front()) + ", " + fmt(rep.eigenvalues.back()) +
                  "] (< 0); Gershgorin [" + fmt(rep.gershgorin.lower) + ", " +
                  fmt(rep.gershgorin.upper) + "] contains all: " +
                  (rep.eigen_in_disks ? "yes" : "no")};
}

// 5. Block product dominates every per-sample off-diagonal entry.
Outcome per_sample_dominance() {
  DominanceConfig dc;
  dc.box.delta = 0.01;
  dc.samples = 1000;
  dc.seed = 1;
  dc.min_distance = 3;
  const auto rep = dominance_experiment(make_caterpillar(16), dc);
  return {rep.violations == 0 && rep.checks > 0,
          "16-leaf caterpillar, " + std::to_string(rep.samples) + " configs x " +
              std::to_string(rep.pairs) + " pairs (both orientations): " +
              std::to_string(rep.violations) + " violations (0); worst |entry|/bound " +
              fmt(rep.worst_ratio)};
}

// 6. Moderate+severe failures ~ delta, severe failures ~ delta^2.
Outcome reconstruction_tiers() {
  const auto sub = make_complete_subtree(5);
  ReconstructionConfig rc;
  rc.m = 100000;
  const auto reps = reconstruction_experiment(sub.tree, sub.node, sub.parent, rc);
  std::vector<double> ds, fail, severe;
  for (const auto& r : reps) {
    ds.push_back(r.delta);
    fail.push_back(r.frequency[1] + r.frequency[2]);
    severe.push_back(r.frequency[2]);
  }
  const auto f = loglog_slope(ds, fail);
  const auto s = loglog_slope(ds, severe);
  const bool ok = f.valid && s.valid && std::fabs(f.slope - 1.0) <= 0.3 &&
                  std::fabs(s.slope - 2.0) <= 0.5;
  return {ok, "depth-5 subtree, m 1e5 per delta: moderate+severe slope " + fmt(f.slope) +
                  " (1 +/- 0.3), severe slope " + fmt(s.slope) + " (2 +/- 0.5)"};
}

// 7. W band exceedances: P(W > K) ~ delta, P(W > K / delta) ~ delta^2.
Outcome w_tiers() {
  const Tree tree = make_spine_tree(8, 3);
  const auto [e, f] = farthest_pair(tree);
  WTierConfig wc;
  wc.m = 100000;
  const auto rep = w_tier_experiment(tree, e, f, wc);
  const auto& s1 = rep.exceed_slope[1];
  const auto& s2 = rep.exceed_slope[2];
  const bool ok = s1.valid && s2.valid && std::fabs(s1.slope - 1.0) <= 0.4 &&
                  std::fabs(s2.slope - 2.0) <= 0.6;
  return {ok, "spine:8:3, N=" + std::to_string(rep.distance) + ", fitted K " + fmt(rep.k) +
                  ": P(W > K) slope " + fmt(s1.slope) + " (1 +/- 0.4), P(W > K/delta) slope " +
                  fmt(s2.slope) + " (2 +/- 0.6)"};
}

// 8. Two boundary maxima of equal likelihood.
Outcome steel() {
  const auto rep = steel_example(0.05);
  const double gap = std::fabs(rep.loglik1 - rep.loglik2);
  const double excess = rep.polished_max - rep.loglik1;
  const bool ok = gap <= 1e-12 && excess <= 1e-9 && rep.maximizers_on_boundary &&
                  rep.maximizers.size() >= 2;
  return {ok, "|l1 - l2| " + fmt(gap) + " (<= 1e-12); grid+polish excess " + fmt(excess) +
                  " (<= 1e-9); " + std::to_string(rep.maximizers.size()) +
                  " maximizers, all on the boundary: " + (rep.maximizers_on_boundary ? "yes" : "no")};
}

// 9. Population optimization on the quartet.
Outcome population_optimization() {
  const Tree quartet = make_caterpillar(4);
  constexpr int kStarts = 20;
  constexpr double kErrorFloor = 1e-11;

  // Worst one-sweep error over the starts at a given delta.
  auto one_sweep = [&](double delta) {
    RegimeBox box;
    box.delta = delta;
    const auto truth = sample_edge_params(quartet, box, Role::kTruth, 900).theta;
    const auto obj = exact_objective(quartet, truth);
    double worst = 0.0;
    for (int s = 0; s < kStarts; ++s) {
      const auto start = sample_edge_params(quartet, box, Role::kEstimate, 1000 + s).theta;
      AscentOptions o;
      o.max_sweeps = 1;
      o.theta_star = truth;
      worst = std::max(worst, coordinate_ascent(quartet, start, obj, o).linf_error.at(1));
    }
    return worst;
  };

  RegimeBox box;
  box.delta = 0.01;
  const auto truth = sample_edge_params(quartet, box, Role::kTruth, 900).theta;
  const auto obj = exact_objective(quartet, truth);
  const auto [lo, hi] = box.theta_interval(Role::kEstimate);
  double cd_worst = 0.0, worst_ratio = 0.0;
  int pga_max_iters = 0;
  bool pga_reached = true;
  for (int s = 0; s < kStarts; ++s) {
    const auto start = sample_edge_params(quartet, box, Role::kEstimate, 1000 + s).theta;
    AscentOptions o;
    o.theta_star = truth;
    cd_worst = std::max(cd_worst, coordinate_ascent(quartet, start, obj, o).linf_error.back());

    GradientOptions g;
    g.step = box.delta / 2.0;
    g.lo = lo;
    g.hi = hi;
    g.max_iters = 5000;
    g.tol = 1e-12;
    g.theta_star = truth;
    const auto fit = projected_gradient_ascent(quartet, start, obj, g);
    const auto& err = fit.linf_error;
    for (std::size_t k = 0; k + 1 < err.size() && err[k] > kErrorFloor; ++k) {
      worst_ratio = std::max(worst_ratio, err[k + 1] / err[k]);
    }
    pga_reached = pga_reached && err.back() < 1e-8;
    pga_max_iters = std::max(pga_max_iters, fit.iterations);
  }

  // K is fitted at delta = 0.01 and checked on held-out delta = 0.005.
  const double fit_delta = 0.01, check_delta = 0.005;
  const double k = one_sweep(fit_delta) / (fit_delta * fit_delta);
  const double held_out = one_sweep(check_delta);
  const bool sweep_ok = held_out <= k * check_delta * check_delta;

  const bool ok = cd_worst < 1e-8 && worst_ratio < 1.0 && pga_reached && sweep_ok;
  return {ok, "coordinate ascent worst error " + fmt(cd_worst) +
                  " (< 1e-8); gradient ascent (step delta/2) worst error ratio " +
                  fmt(worst_ratio, 6) + " (< 1) above " + fmt(kErrorFloor) + ", " +
                  std::to_string(pga_max_iters) + " iterations max; one sweep: fitted K " +
                  fmt(k) + ", held-out error at delta 0.005 " + fmt(held_out) + " (<= K delta^2 = " +
                  fmt(k * check_delta * check_delta) + ")"};
}

// 10. Claims on random inputs.
Outcome q_claims() {
  const auto checks = run_claim_suite(100000, 7);
  bool ok = true;
  std::string detail;
  for (const auto& c : checks) {
    if (!detail.empty()) detail += "; ";
    detail += c.name + " " + std::to_string(c.failures) + "/" + std::to_string(c.trials);
    if (!c.asserted) detail += " (not asserted)";
    if (c.asserted) ok = ok && c.passed() && c.trials >= 100000;
  }
  return {ok, detail};
}

// 11. Same seeds give byte-identical CSVs at 1 and 8 threads.
Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "cfn-acceptance-determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"sample", "--tree", "random:10:3", "--m", "500"},
      {"fit", "--tree", "random:7:2", "--mode", "mc", "--m", "3000", "--delta", "0.02"},
      {"hessian", "--tree", "caterpillar:8", "--mode", "mc", "--m", "20000", "--delta", "0.01"},
      {"landscape-diag", "--mode", "mc", "--m", "20000"},
      {"recon-tiers", "--m", "20000"},
      {"wterms", "--m", "4000", "--dominance-samples", "40"},
  };
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  bool ran = true;
  for (const char* threads : {"1", "8"}) {
    for (std::size_t c = 0; c < commands.size(); ++c) {
      std::vector<std::string> args{"cfn"};
      args.insert(args.end(), commands[c].begin(), commands[c].end());
      args.insert(args.end(), {"--threads", threads, "--seed", "11", "--out",
                               (root / threads / std::to_string(c)).string()});
      ran = ran && run(args) == kExitOk;
    }
  }
  std::cout.rdbuf(old);
  set_thread_count(0);
  if (!ran) return {false, "a command failed"};

  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  int files = 0, differ = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "1")) {
    if (entry.path().extension() != ".csv") continue;
    const auto other = root / "8" / fs::relative(entry.path(), root / "1");
    ++files;
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differ;
  }
  fs::remove_all(root);
  return {files > 0 && differ == 0, std::to_string(files) + " CSV files from " +
                                        std::to_string(commands.size()) +
                                        " commands, " + std::to_string(differ) +
                                        " differ between 1 and 8 threads (0)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "derivative correctness", 30, derivative_correctness},
      {2, "score identity", 5, score_identity},
      {3, "diagonal scaling", 10, diagonal_scaling},
      {4, "off-diagonal decay and concavity", 120, offdiag_concavity},
      {5, "per-sample dominance", 120, per_sample_dominance},
      {6, "reconstruction tiers", 180, reconstruction_tiers},
      {7, "W-tier scaling", 180, w_tiers},
      {8, "Steel's example", 60, steel},
      {9, "population optimization", 60, population_optimization},
      {10, "q-claims and swap identities", 30, q_claims},
      {11, "determinism", 0, determinism},
  };
  std::set<int> only;
  for (int k = 1; k < argc; ++k) only.insert(std::atoi(argv[k]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    Stopwatch clock;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = clock.seconds();
    const bool in_time = c.limit_seconds <= 0 || secs < c.limit_seconds;
    const bool pass = out.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s %2d %s: %s; %.2f s", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                out.detail.c_str(), secs);
    if (c.limit_seconds > 0) std::printf(" (< %.0f s)", c.limit_seconds);
    std::printf("\n");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
