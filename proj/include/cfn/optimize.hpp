#pragma once

// Likelihood maximization over theta-hat for a fixed topology.
//
// The objective is a weighted set of leaf patterns: a sample batch (mean
// log-likelihood) or the population under a known theta* (expected
// log-likelihood, exact enumeration).

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfn/likelihood.hpp"
#include "cfn/tree.hpp"

namespace cfn {

struct Objective {
  std::string kind;  // "batch" or "exact"
  LeafPatterns patterns;
};
Objective batch_objective(const SampleBatch& batch);
Objective exact_objective(const Tree& tree, std::span<const double> theta_star,
                          int cap = kExactLeafCap);

inline constexpr double kClampEps = 1e-9;

struct FeasibleInterval {
  double lo = 0.0;
  double hi = 1.0 - kClampEps;
};
// (-1 + eps, 1 - eps): allows anti-ferromagnetic edges.
FeasibleInterval widened_interval();

struct UpdateResult {
  double theta = 0.0;
  bool flat = false;      // every weighted Z_x Z_y was zero; theta unchanged
  bool clamped = false;   // the slice maximum lies at a feasible-interval end
  int iterations = 0;
};

// Exact maximizer over the feasible interval of the objective as a function
// of theta_e alone. With c = Z(x->y) Z(y->x) per pattern, the slice is
// sum w log(1 + theta c) + const, so the stationarity condition is
// sum w c / (1 + theta c) = 0. Solved by Newton with a bisection bracket.
UpdateResult coordinate_update(const Tree& tree, std::span<const double> theta,
                               const Objective& objective, EdgeId e,
                               const FeasibleInterval& interval = {});

enum class StopReason { kTolerance, kMaxIter, kBoundary };
const char* stop_reason_name(StopReason r);

struct FitResult {
  std::vector<double> theta;
  std::vector<double> objective;   // initial value, then one entry per sweep / iteration
  std::vector<double> linf_error;  // same indexing; empty without theta*
  int iterations = 0;
  StopReason stop = StopReason::kMaxIter;
};

struct AscentOptions {
  int max_sweeps = 200;
  double tol = 1e-13;  // L-inf change of one sweep
  FeasibleInterval interval;
  std::optional<std::vector<double>> theta_star;
};

// Cyclic sweeps in edge-id order.
FitResult coordinate_ascent(const Tree& tree, std::span<const double> theta0,
                            const Objective& objective, const AscentOptions& options = {});

struct GradientOptions {
  double step = 0.005;
  double lo = 0.0;  // box, applied to every coordinate
  double hi = 1.0 - kClampEps;
  int max_iters = 2000;
  double tol = 1e-10;  // L-inf of (Proj(theta + step g) - theta) / step
  std::optional<std::vector<double>> theta_star;
};

// theta <- Proj_box(theta + step * grad). Throws ValidationError when step <= 0
// or theta0 lies outside the box.
FitResult projected_gradient_ascent(const Tree& tree, std::span<const double> theta0,
                                    const Objective& objective, const GradientOptions& options);

double objective_value(const Tree& tree, std::span<const double> theta, const Objective& objective);

}  // namespace cfn
