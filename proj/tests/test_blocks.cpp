#include <cmath>

#include "cfn/blocks.hpp"
#include "cfn/landscape.hpp"
#include "cfn/rng.hpp"
#include "doctest.h"

using namespace cfn;

namespace {

BlockInput random_block(const CounterRng& rng, std::uint64_t k, bool tail, double delta) {
  BlockInput in;
  in.tail = tail;
  const int len = tail ? 5 : 4;
  for (int j = 0; j < len; ++j) {
    // Mix strong and weak signals of either sign.
    const double mag = rng.uniform(k, j) < 0.7 ? 1 - rng.uniform(0.5, 8, k, 10 + j) * delta
                                               : rng.uniform(0, 1, k, 10 + j);
    in.eta.push_back(rng.uniform(k, 20 + j) < 0.2 ? -mag : mag);
  }
  for (int j = 0; j < len - 1; ++j) in.theta_hat.push_back(1 - rng.uniform(1, 8, k, 30 + j) * delta);
  return in;
}

}  // namespace

TEST_CASE("closed-form block sup agrees with the grid search") {
  CounterRng rng(11, Stream::kTest);
  const double delta = 0.01;
  const double x_max = 1 - delta;
  for (std::uint64_t k = 0; k < 400; ++k) {
    const auto in = random_block(rng, k, k % 2 == 1, delta);
    const auto cf = block_sup_closed_form(in, x_max);
    const auto grid = block_sup_grid(in, x_max, 2001, 1e-13);
    CHECK(cf.value == doctest::Approx(grid.value).epsilon(1e-9));
    CHECK(block_value(in, cf.argmax) == doctest::Approx(cf.value).epsilon(1e-12));
    CHECK(std::abs(cf.argmax) == doctest::Approx(x_max));
    for (double x : {-x_max, -0.5, 0.0, 0.3, x_max}) CHECK(block_value(in, x) <= cf.value * (1 + 1e-12));
  }
}

TEST_CASE("doubling the grid barely moves the sup") {
  CounterRng rng(12, Stream::kTest);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto in = random_block(rng, k, false, 0.02);
    const auto a = block_sup_grid(in, 0.99, 1001, 1e-13);
    const auto b = block_sup_grid(in, 0.99, 2001, 1e-13);
    CHECK(std::abs(a.value - b.value) <= 1e-6 * b.value);
  }
}

TEST_CASE("reversed signals end with the last eta") {
  CounterRng rng(13, Stream::kTest);
  const auto in = random_block(rng, 0, false, 0.01);
  const auto rs = reversed_signals(in);
  REQUIRE(rs.size() == in.eta.size());
  CHECK(rs.back() == in.eta.back());
  CHECK(rs[2] == doctest::Approx(q_combine(in.theta_hat[2] * rs[3], in.eta[2])));
}

TEST_CASE("pair sup bounds the two-term product") {
  CounterRng rng(14, Stream::kTest);
  for (std::uint64_t k = 0; k < 100; ++k) {
    const double th = rng.uniform(0.9, 0.99, k, 0);
    const double e1 = rng.uniform(-0.99, 0.99, k, 1), e2 = rng.uniform(-0.99, 0.99, k, 2);
    const auto s = pair_sup(th, e1, e2, 0.98);
    const auto g = pair_sup(th, e1, e2, 0.98, SupSearch{SupMethod::kGrid});
    CHECK(s.value == doctest::Approx(g.value).epsilon(1e-9));
    for (int i = -10; i <= 10; ++i) CHECK(pair_product(th, e1, e2, 0.098 * i) <= s.value * (1 + 1e-12));
  }
}

TEST_CASE("block decomposition layout and dominance on a caterpillar") {
  const Tree t = make_caterpillar(20);
  RegimeBox box;
  box.delta = 0.01;
  const auto draw = draw_params(t, box, ThetaHatMode::kBox, 3);
  const auto batch = sample_batch(t, draw.truth.theta, 30, 5);
  const double x_max = 1 - 2 * box.estimate_lo * box.delta;
  const double ceiling = w_ceiling(box);
  for (const auto& cfg : batch.samples) {
    const auto table = directed_magnetizations(t, draw.estimate.theta, cfg);
    for (EdgeId e = 0; e < t.edge_count(); ++e) {
      for (EdgeId f = 0; f < t.edge_count(); ++f) {
        if (e == f) continue;
        const auto pd = path_decomposition(t, e, f);
        const auto s = path_signals(t, draw.estimate.theta, table, pd);
        const auto bt = block_decomposition(s, x_max);
        const int N = pd.distance;
        CHECK(bt.distance == N);
        if (N <= 2) {
          CHECK(bt.r == N + 1);
          CHECK(bt.w.empty());
        } else {
          CHECK(bt.r == (N + 1) % 4);
          CHECK(static_cast<int>(bt.w.size()) == (N + 1 - bt.r) / 4 - 1);
          for (std::size_t k = 0; k < bt.w_index.size(); ++k) {
            CHECK(bt.w_index[k] == N - 4 - 4 * static_cast<int>(k));
            CHECK(bt.w[k] <= ceiling);
          }
          if (!bt.w_index.empty()) CHECK(bt.w_index.back() == bt.r + 3);
        }
        CHECK(bt.hessian_abs == doctest::Approx(std::abs(hessian_offdiag(s))));
        CHECK(bt.hessian_abs <= bt.path_bound * (1 + 1e-12));
        CHECK(bt.hessian_abs <= bt.product * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("sliding windows contain the decomposition blocks") {
  const Tree t = make_caterpillar(16);
  const std::vector<double> theta(t.edge_count(), 0.97);
  const auto batch = sample_batch(t, theta, 5, 1);
  const EdgeId e = 0, f = t.edge_count() - 1;
  for (const auto& cfg : batch.samples) {
    const auto s = path_signals(t, theta, cfg, e, f);
    const auto all = sliding_w(s, 0.99);
    const auto bt = block_decomposition(s, 0.99);
    REQUIRE(all.size() == static_cast<std::size_t>(s.distance - 2));
    for (std::size_t k = 0; k < bt.w.size(); ++k) {
      CHECK(bt.w[k] == doctest::Approx(all[bt.w_index[k] - 3]).epsilon(1e-12));
    }
  }
}

TEST_CASE("W values from distinct samples are uncorrelated") {
  // Samples k and k + 1 use disjoint counters, so pairing the first block of
  // one with the last block of the next should show correlation within noise.
  const Tree t = make_caterpillar(24);
  const std::vector<double> theta(t.edge_count(), 0.9);
  const std::size_t m = 4000;
  const auto batch = sample_batch(t, theta, m, 2);
  std::vector<double> a, b;
  for (std::size_t k = 0; k + 1 < m; k += 2) {
    const auto s1 = path_signals(t, theta, batch.samples[k], 0, t.edge_count() - 1);
    const auto s2 = path_signals(t, theta, batch.samples[k + 1], 0, t.edge_count() - 1);
    a.push_back(sliding_w(s1, 0.98).front());
    b.push_back(sliding_w(s2, 0.98).back());
  }
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  const double corr = sab / std::sqrt(saa * sbb);
  CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(a.size())));
}
