#include "cfn/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfn/error.hpp"
#include "cfn/magnetization.hpp"

namespace cfn {

Objective batch_objective(const SampleBatch& batch) {
  if (batch.size() == 0) throw ValidationError("batch objective needs at least one sample");
  return {"batch", batch_patterns(batch)};
}

Objective exact_objective(const Tree& tree, std::span<const double> theta_star, int cap) {
  return {"exact", population_patterns(tree, theta_star, cap)};
}

FeasibleInterval widened_interval() { return {-1.0 + kClampEps, 1.0 - kClampEps}; }

double objective_value(const Tree& tree, std::span<const double> theta, const Objective& objective) {
  return evaluate(tree, theta, objective.patterns, Quantity::kLogLik).loglik();
}

namespace {

// Z(x->y) Z(y->x) for edge e, per pattern. Parallel over patterns; every entry
// is independent so the result does not depend on the schedule.
std::vector<double> edge_products(const Tree& tree, std::span<const double> theta,
                                  const LeafPatterns& patterns, EdgeId e) {
  std::vector<double> c(patterns.size(), 0.0);
  const Edge& ed = tree.edge(e);
  parallel_for(patterns.size(), [&](std::size_t i) {
    if (patterns.weights[i] == 0.0) return;
    auto table = directed_magnetizations(tree, theta, patterns.configs[i]);
    c[i] = table.from(tree, e, ed.a) * table.from(tree, e, ed.b);
  });
  return c;
}

struct Slice {
  const std::vector<double>& c;
  const std::vector<double>& w;

  double score(double t) const {
    double g = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (w[i] != 0.0 && c[i] != 0.0) g += w[i] * c[i] / (1.0 + t * c[i]);
    }
    return g;
  }
  double curvature(double t) const {
    double h = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double d = 1.0 + t * c[i];
      h -= w[i] * c[i] * c[i] / (d * d);
    }
    return h;
  }
};

constexpr int kNewtonCap = 60;
constexpr double kNewtonResidual = 1e-14;

double linf_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::fabs(a[k] - b[k]));
  return d;
}

void check_interval(const FeasibleInterval& in) {
  if (!(in.lo < in.hi && in.lo > -1.0 && in.hi < 1.0)) {
    throw ValidationError("feasible interval must satisfy -1 < lo < hi < 1");
  }
}

}  // namespace

UpdateResult coordinate_update(const Tree& tree, std::span<const double> theta,
                               const Objective& objective, EdgeId e,
                               const FeasibleInterval& interval) {
  check_interval(interval);
  if (e < 0 || e >= tree.edge_count()) throw ValidationError("edge id out of range");
  if (static_cast<int>(theta.size()) != tree.edge_count()) {
    throw ValidationError("theta size does not match the tree");
  }
  const auto c = edge_products(tree, theta, objective.patterns, e);
  const auto& w = objective.patterns.weights;
  UpdateResult out;
  out.theta = theta[e];
  bool flat = true;
  for (std::size_t i = 0; i < c.size(); ++i) flat = flat && (w[i] == 0.0 || c[i] == 0.0);
  if (flat) {
    out.flat = true;
    return out;
  }

  Slice slice{c, w};
  double a = interval.lo, b = interval.hi;
  const double ga = slice.score(a);
  const double gb = slice.score(b);
  if (ga <= 0.0) {
    out.theta = a;
    out.clamped = true;
    return out;
  }
  if (gb >= 0.0) {
    out.theta = b;
    out.clamped = true;
    return out;
  }
  // Invariant: score(a) > 0 > score(b).
  double t = std::clamp(theta[e], a, b);
  for (int it = 0; it < kNewtonCap; ++it) {
    out.iterations = it + 1;
    const double g = slice.score(t);
    if (std::fabs(g) <= kNewtonResidual) break;
    if (g > 0.0) a = t; else b = t;
    const double h = slice.curvature(t);
    double next = h < 0.0 ? t - g / h : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (next == t || b - a <= 4 * std::numeric_limits<double>::epsilon()) {
      t = next;
      break;
    }
    t = next;
  }
  out.theta = t;
  return out;
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::kTolerance: return "tolerance";
    case StopReason::kMaxIter: return "max-iter";
    case StopReason::kBoundary: return "boundary";
  }
  return "?";
}

FitResult coordinate_ascent(const Tree& tree, std::span<const double> theta0,
                            const Objective& objective, const AscentOptions& options) {
  check_interval(options.interval);
  FitResult fit;
  fit.theta.assign(theta0.begin(), theta0.end());
  for (double t : fit.theta) {
    if (!(t > -1.0 && t < 1.0)) throw ValidationError("starting point must be interior");
  }
  auto record = [&] {
    fit.objective.push_back(objective_value(tree, fit.theta, objective));
    if (options.theta_star) fit.linf_error.push_back(linf_distance(fit.theta, *options.theta_star));
  };
  record();
  bool any_clamped = false;
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double change = 0.0;
    any_clamped = false;
    for (EdgeId e = 0; e < tree.edge_count(); ++e) {
      auto up = coordinate_update(tree, fit.theta, objective, e, options.interval);
      change = std::max(change, std::fabs(up.theta - fit.theta[e]));
      fit.theta[e] = up.theta;
      any_clamped = any_clamped || up.clamped;
    }
    fit.iterations = sweep + 1;
    record();
    if (change < options.tol) {
      fit.stop = any_clamped ? StopReason::kBoundary : StopReason::kTolerance;
      return fit;
    }
  }
  fit.stop = StopReason::kMaxIter;
  return fit;
}

FitResult projected_gradient_ascent(const Tree& tree, std::span<const double> theta0,
                                    const Objective& objective, const GradientOptions& options) {
  if (!(options.step > 0.0)) throw ValidationError("gradient step must be positive");
  if (!(options.lo < options.hi && options.lo > -1.0 && options.hi < 1.0)) {
    throw ValidationError("gradient box must satisfy -1 < lo < hi < 1");
  }
  FitResult fit;
  fit.theta.assign(theta0.begin(), theta0.end());
  for (double t : fit.theta) {
    if (t < options.lo || t > options.hi) throw ValidationError("starting point lies outside the box");
  }
  auto record = [&] {
    fit.objective.push_back(objective_value(tree, fit.theta, objective));
    if (options.theta_star) fit.linf_error.push_back(linf_distance(fit.theta, *options.theta_star));
  };
  record();
  for (int it = 0; it < options.max_iters; ++it) {
    const auto g = evaluate(tree, fit.theta, objective.patterns, Quantity::kGradient).value;
    double residual = 0.0;
    bool on_face = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double next = std::clamp(fit.theta[k] + options.step * g[k], options.lo, options.hi);
      residual = std::max(residual, std::fabs(next - fit.theta[k]) / options.step);
      on_face = on_face || next == options.lo || next == options.hi;
      fit.theta[k] = next;
    }
    fit.iterations = it + 1;
    record();
    if (residual < options.tol) {
      fit.stop = on_face ? StopReason::kBoundary : StopReason::kTolerance;
      return fit;
    }
  }
  fit.stop = StopReason::kMaxIter;
  return fit;
}

}  // namespace cfn
