#include "cfn/claims.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "cfn/kernels.hpp"
#include "cfn/magnetization.hpp"
#include "cfn/rng.hpp"

namespace cfn {

namespace {

// Per-trial input source: endpoints with probability 1/4 each, else uniform.
class Draw {
 public:
  Draw(const CounterRng& rng, std::uint64_t trial) : rng_(rng), trial_(trial) {}

  double uniform(double lo, double hi) { return rng_.uniform(lo, hi, trial_, sub_++); }

  double pick(double lo, double hi) {
    const auto b = rng_.bits(trial_, sub_++) & 3;
    if (b == 0) return lo;
    if (b == 1) return hi;
    return uniform(lo, hi);
  }

  double sign() { return (rng_.bits(trial_, sub_++) & 1) ? 1.0 : -1.0; }

 private:
  const CounterRng& rng_;
  std::uint64_t trial_;
  std::uint64_t sub_ = 0;
};

using TrialFn = std::function<double(Draw&)>;

// Runs fn per trial; fn returns the margin of that trial.
ClaimCheck run_trials(const std::string& name, std::size_t trials, std::uint64_t seed,
                      const TrialFn& fn, double slack = kClaimSlack) {
  CounterRng rng(seed, Stream::kTest);
  std::vector<double> margin(trials);
  parallel_for(trials, [&](std::size_t i) {
    Draw d(rng, i);
    margin[i] = fn(d);
  });
  ClaimCheck out;
  out.name = name;
  out.trials = trials;
  out.worst_margin = trials ? *std::min_element(margin.begin(), margin.end()) : 0.0;
  out.failures = static_cast<std::size_t>(
      std::count_if(margin.begin(), margin.end(), [&](double m) { return m < -slack; }));
  return out;
}

struct CorruptionInput {
  double a, big_a, b, delta, k;
  double s1, s2, s3, s4, t1, t2;
};

CorruptionInput draw_corruption(Draw& d) {
  CorruptionInput c{};
  c.a = d.uniform(0.01, 3.0);
  c.big_a = d.uniform(2.0 * c.a * (1.0 + 1e-9), 2.0 * c.a + 6.0);
  c.b = d.uniform(0.01, 6.0);
  c.k = 2.0 * c.big_a * c.big_a / c.a + c.b;
  // Strict upper limits: delta < a / 2 and K delta < 1/2.
  const double dmax = std::min(c.a / 2.0, 0.5 / c.k) * (1.0 - 1e-9);
  c.delta = d.uniform(0.0, dmax);
  c.s1 = d.pick(-1.0 + c.a * c.delta, 1.0);
  c.s2 = d.pick(1.0 - c.big_a * c.delta, 1.0);
  c.s3 = d.pick(1.0 - c.big_a * c.delta, 1.0);
  c.s4 = d.pick(1.0 - c.big_a * c.delta, 1.0);
  c.t1 = d.pick(1.0 - c.b * c.delta, 1.0);
  c.t2 = d.pick(1.0 - c.b * c.delta, 1.0);
  return c;
}

double corruption_inner(const CorruptionInput& c) {
  return c.t2 * q_combine(c.t1 * q_combine(c.s1, c.s2), c.s3);
}

struct PairBox {
  double a, big_a, b, delta, theta;
};

PairBox draw_pair_box(Draw& d, bool strong) {
  PairBox p{};
  p.a = d.uniform(0.05, 4.0);
  p.big_a = d.uniform(p.a * (1.0 + 1e-6), p.a + 8.0);
  p.b = strong ? d.uniform(p.a * (1.0 + 1e-3), p.a + 8.0) : p.a;
  const double dmax = 1.0 / std::max(p.big_a, p.b) * 0.999;
  p.delta = d.uniform(1e-4, std::min(dmax, 0.2));
  p.theta = d.pick(1.0 - p.big_a * p.delta, 1.0 - p.a * p.delta);
  return p;
}

}  // namespace

ClaimCheck check_two_strong_signals(std::size_t trials, std::uint64_t seed) {
  return run_trials("two strong signals", trials, seed, [](Draw& d) {
    const double eps = d.pick(0.0, 0.5 * (1.0 - 1e-12));
    const double s = d.pick(1.0 - eps, 1.0);
    const double t = d.pick(1.0 - eps, 1.0);
    const double bound = 0.8 * eps * eps;
    const double up = q_combine(s, t) - (1.0 - bound);
    const double down = (-1.0 + bound) - q_combine(-s, -t);
    return std::min(up, down);
  });
}

ClaimCheck check_corruption_distance3(std::size_t trials, std::uint64_t seed) {
  return run_trials("corruption at distance 3", trials, seed, [](Draw& d) {
    const auto c = draw_corruption(d);
    return corruption_inner(c) - (1.0 - c.k * c.delta);
  });
}

ClaimCheck check_corruption_distance3_squared(std::size_t trials, std::uint64_t seed) {
  return run_trials("corruption at distance 3, next step (K^2)", trials, seed, [](Draw& d) {
    const auto c = draw_corruption(d);
    const double v = q_combine(corruption_inner(c), c.s4);
    return v - (1.0 - 0.8 * c.k * c.k * c.delta * c.delta);
  });
}

ClaimCheck check_corruption_distance3_unsquared(std::size_t trials, std::uint64_t seed) {
  auto out = run_trials("corruption at distance 3, next step (K)", trials, seed, [](Draw& d) {
    const auto c = draw_corruption(d);
    const double v = q_combine(corruption_inner(c), c.s4);
    return v - (1.0 - 0.8 * c.k * c.delta * c.delta);
  });
  out.asserted = false;
  return out;
}

ClaimCheck check_opposite_signs(std::size_t trials, std::uint64_t seed) {
  return run_trials("opposite signs", trials, seed, [](Draw& d) {
    const double a = d.uniform(0.01, 4.0);
    const double big_a = d.uniform(a * (1.0 + 1e-9), a + 8.0);
    const double delta = d.uniform(0.0, 1.0 / big_a * (1.0 - 1e-9));
    const double lo = 1.0 - big_a * delta, hi = 1.0 - a * delta;
    const double s = d.pick(lo, hi);
    const double t = d.pick(lo, hi);
    const double r = a / big_a;
    const double v = q_combine(s, -t);
    const double w = q_combine(-s, t);
    // q(-s, t) = -q(s, -t), so both sides share the symmetric bound.
    const double m = std::min((1.0 - r) - std::fabs(v), (1.0 - r) - std::fabs(w));
    const double g = d.sign() * d.pick(0.0, hi);
    return std::min(m, q_combine(t, g) - (-1.0 + r));
  });
}

ClaimCheck check_swap_identities(std::size_t trials, std::uint64_t seed) {
  return run_trials(
      "reversing the recursion", trials, seed,
      [](Draw& d) {
        const double xi1 = d.uniform(-1.0, 1.0);
        const double eta1 = d.uniform(-1.0, 1.0);
        const double eta2 = d.pick(-1.0, 1.0);
        const double th = d.uniform(0.0, 1.0);
        const double xi2 = th * q_combine(eta1, xi1);
        const double et2 = eta2;
        const double et1 = q_combine(th * et2, eta1);
        const double i_lhs = (1.0 + xi2 * eta2) * (1.0 + xi1 * eta1);
        const double i_rhs = (1.0 + th * eta1 * et2) * (1.0 + xi1 * et1);
        const double ii_lhs = (1.0 + th * eta1 * et2) * (1.0 + th * eta1 * et2) * (1.0 - et1 * et1);
        const double ii_rhs = (1.0 - eta1 * eta1) * (1.0 - th * et2 * th * et2);
        return 1e-12 - std::max(std::fabs(i_lhs - i_rhs), std::fabs(ii_lhs - ii_rhs));
      },
      0.0);
}

ClaimCheck check_pair_generic(std::size_t trials, std::uint64_t seed, const SupSearch& search) {
  return run_trials("two-term sup, generic signals", trials, seed, [&](Draw& d) {
    const auto p = draw_pair_box(d, false);
    const double lim = 1.0 - p.a * p.delta;
    const double eta1 = d.sign() * d.pick(0.0, lim);
    const double eta2 = d.sign() * d.pick(0.0, lim);
    const double sup = pair_sup(p.theta, eta1, eta2, lim, search).value;
    const double ceiling = std::max(16.0, 8.0 / p.a) / p.delta;
    return (ceiling - sup) / ceiling;
  });
}

ClaimCheck check_pair_strong(std::size_t trials, std::uint64_t seed, const SupSearch& search) {
  return run_trials("two-term sup, strong signals", trials, seed, [&](Draw& d) {
    const auto p = draw_pair_box(d, true);
    const double lim = 1.0 - p.a * p.delta;
    const double eta1 = d.sign() * d.pick(1.0 - p.b * p.delta, lim);
    const double eta2 = d.sign() * d.pick(1.0 - p.b * p.delta, lim);
    const double sup = pair_sup(p.theta, eta1, eta2, lim, search).value;
    const double ceiling =
        4.0 * std::pow(p.b, 4) / (p.a * p.a * (p.b - p.a) * (p.b - p.a));
    return (ceiling - sup) / ceiling;
  });
}

ClaimCheck check_four_term(std::size_t trials, std::uint64_t seed, const SupSearch& search) {
  return run_trials("four-term block bound", trials, seed, [&](Draw& d) {
    const double c = d.uniform(0.1, 2.0);
    const double big_c = d.uniform(2.0 * c, 2.0 * c + 6.0);
    const double delta = d.uniform(1e-4, 0.5 / big_c * 0.999);
    const double lim = 1.0 - 2.0 * c * delta;
    BlockInput in;
    for (int j = 0; j < 4; ++j) in.eta.push_back(d.sign() * d.pick(0.0, lim));
    for (int j = 0; j < 3; ++j) in.theta_hat.push_back(d.pick(1.0 - 2.0 * big_c * delta, lim));
    const double w = block_sup(in, lim, search).value;
    const auto tilde = reversed_signals(in);
    double num = 1.0, den = 1.0;
    for (int j = 0; j < 4; ++j) num *= 1.0 - in.eta[j] * in.eta[j];
    for (int j = 0; j < 3; ++j) {
      const double f = 1.0 + in.theta_hat[j] * in.eta[j] * tilde[j + 1];
      den *= f * f;
    }
    const double bound = num / den / ((2.0 * c * delta) * (2.0 * c * delta));
    return (bound - w) / bound;
  });
}

std::vector<ClaimCheck> run_claim_suite(std::size_t trials, std::uint64_t seed) {
  SupSearch grid;
  grid.method = SupMethod::kGrid;
  grid.grid_points = 401;
  return {
      check_two_strong_signals(trials, seed),
      check_corruption_distance3(trials, seed + 1),
      check_corruption_distance3_squared(trials, seed + 2),
      check_corruption_distance3_unsquared(trials, seed + 2),
      check_opposite_signs(trials, seed + 3),
      check_swap_identities(trials, seed + 4),
      check_pair_generic(trials, seed + 5, grid),
      check_pair_strong(trials, seed + 6, grid),
      check_four_term(trials, seed + 7, grid),
  };
}

}  // namespace cfn
