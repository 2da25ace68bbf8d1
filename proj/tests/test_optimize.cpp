#include <algorithm>
#include <cmath>

#include "cfn/error.hpp"
#include "cfn/landscape.hpp"
#include "cfn/optimize.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cfn;

TEST_CASE("single edge update returns the population theta") {
  const Tree t(2, {{0, 1}});
  for (double star : {0.1, 0.7, 0.97}) {
    const auto obj = exact_objective(t, std::vector<double>{star});
    const auto up = coordinate_update(t, std::vector<double>{0.5}, obj, 0);
    CHECK(up.theta == doctest::Approx(star).epsilon(1e-12));
    CHECK_FALSE(up.clamped);
  }
  // Agreement rate 3/4 in a batch gives theta = 2 * 3/4 - 1.
  SampleBatch b;
  b.leaf_count = 2;
  b.samples = {{1, 1}, {1, 1}, {-1, -1}, {1, -1}};
  const auto up = coordinate_update(t, std::vector<double>{0.1}, batch_objective(b), 0);
  CHECK(up.theta == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("update clamps at the interval ends") {
  const Tree t(2, {{0, 1}});
  SampleBatch agree;
  agree.leaf_count = 2;
  agree.samples = {{1, 1}, {-1, -1}};
  const auto up = coordinate_update(t, std::vector<double>{0.3}, batch_objective(agree), 0);
  CHECK(up.clamped);
  CHECK(up.theta == doctest::Approx(1 - kClampEps));

  SampleBatch disagree;
  disagree.leaf_count = 2;
  disagree.samples = {{1, -1}};
  const auto lo = coordinate_update(t, std::vector<double>{0.3}, batch_objective(disagree), 0);
  CHECK(lo.clamped);
  CHECK(lo.theta == 0.0);
  const auto wide =
      coordinate_update(t, std::vector<double>{0.3}, batch_objective(disagree), 0, widened_interval());
  CHECK(wide.theta == doctest::Approx(-1 + kClampEps));
}

TEST_CASE("update ignores sample order") {
  const Tree t = make_random_tree(7, 3);
  const std::vector<double> theta(t.edge_count(), 0.9);
  auto batch = sample_batch(t, theta, 300, 1);
  const auto a = coordinate_update(t, theta, batch_objective(batch), 2);
  std::reverse(batch.samples.begin(), batch.samples.end());
  const auto b = coordinate_update(t, theta, batch_objective(batch), 2);
  CHECK(a.theta == doctest::Approx(b.theta).epsilon(1e-13));
}

TEST_CASE("coordinate update maximizes the slice") {
  const Tree t = testing::quartet();
  const std::vector<double> star{0.9, 0.8, 0.85, 0.7, 0.6};
  const auto obj = exact_objective(t, star);
  std::vector<double> theta{0.5, 0.5, 0.5, 0.5, 0.5};
  for (EdgeId e = 0; e < 5; ++e) {
    const auto up = coordinate_update(t, theta, obj, e);
    auto at = theta;
    at[e] = up.theta;
    const double best = objective_value(t, at, obj);
    for (double d : {-1e-3, 1e-3}) {
      auto near = at;
      near[e] += d;
      if (near[e] > 1 - kClampEps) continue;  // clamped at the upper end
      CHECK(objective_value(t, near, obj) < best);
    }
  }
}

TEST_CASE("coordinate ascent is monotone and recovers theta* from the population") {
  const Tree t = make_random_tree(6, 2);
  RegimeBox box;
  box.delta = 0.02;
  const auto star = sample_edge_params(t, box, Role::kTruth, 4).theta;
  const auto start = sample_edge_params(t, box, Role::kEstimate, 5).theta;
  AscentOptions opt;
  opt.theta_star = star;
  const auto fit = coordinate_ascent(t, start, exact_objective(t, star), opt);
  for (std::size_t k = 1; k < fit.objective.size(); ++k) {
    CHECK(fit.objective[k] >= fit.objective[k - 1] - 1e-14);
  }
  CHECK(fit.stop == StopReason::kTolerance);
  CHECK(testing::max_abs_diff(fit.theta, star) < 1e-8);
  CHECK(fit.linf_error.size() == fit.objective.size());
}

TEST_CASE("coordinate ascent on Steel's batch reaches a boundary maximum") {
  const auto fx = steel_fixture();
  const auto obj = batch_objective(fx.batch);
  const auto fit = coordinate_ascent(fx.tree, std::vector<double>(5, 0.5), obj);
  bool boundary = false;
  for (double th : fit.theta) boundary = boundary || th <= 1e-8 || th >= 1 - 1e-8;
  CHECK(boundary);
  CHECK(objective_value(fx.tree, fit.theta, obj) >=
        std::max(objective_value(fx.tree, fx.theta1, obj), objective_value(fx.tree, fx.theta2, obj)) -
            1e-8);
}

TEST_CASE("projected gradient ascent stays in the box") {
  const Tree t = testing::quartet();
  RegimeBox box;
  box.delta = 0.01;
  const auto star = sample_edge_params(t, box, Role::kTruth, 1).theta;
  const auto start = sample_edge_params(t, box, Role::kEstimate, 2).theta;
  const auto [lo, hi] = box.theta_interval(Role::kEstimate);
  GradientOptions opt;
  opt.step = box.delta / 2;
  opt.lo = lo;
  opt.hi = hi;
  opt.max_iters = 3000;
  opt.tol = 1e-12;
  opt.theta_star = star;
  const auto fit = projected_gradient_ascent(t, start, exact_objective(t, star), opt);
  for (double th : fit.theta) {
    CHECK(th >= lo);
    CHECK(th <= hi);
  }
  for (std::size_t k = 1; k < fit.objective.size(); ++k) {
    CHECK(fit.objective[k] >= fit.objective[k - 1] - 1e-13);
  }
  CHECK(fit.linf_error.back() < 1e-8);

  // theta* is a fixed point.
  const auto fixed = projected_gradient_ascent(t, star, exact_objective(t, star), opt);
  CHECK(testing::max_abs_diff(fixed.theta, star) < 1e-12);
  CHECK(fixed.iterations <= 1);

  opt.step = 0.0;
  CHECK_THROWS_AS(projected_gradient_ascent(t, start, exact_objective(t, star), opt), ValidationError);
  opt.step = 0.005;
  std::vector<double> outside(5, 0.5);
  CHECK_THROWS_AS(projected_gradient_ascent(t, outside, exact_objective(t, star), opt), ValidationError);
}

TEST_CASE("objective value matches the brute-force log-likelihood") {
  const Tree t = testing::quartet();
  const std::vector<double> theta{0.9, 0.8, 0.85, 0.7, 0.6};
  const auto batch = sample_batch(t, theta, 100, 3);
  CHECK(objective_value(t, theta, batch_objective(batch)) ==
        doctest::Approx(testing::brute_loglik(t, theta, batch.samples)).epsilon(1e-12));
}
