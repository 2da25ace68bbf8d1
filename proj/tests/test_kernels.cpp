#include <cmath>
#include <stdexcept>

#include "cfn/claims.hpp"
#include "cfn/kernels.hpp"
#include "cfn/rng.hpp"
#include "doctest.h"

using namespace cfn;

TEST_CASE("accumulate is bitwise independent of the thread count") {
  const std::size_t n = 12345;
  ItemFn item = [](std::size_t i, std::span<double> out) {
    out[0] = 1.0 / (1.0 + static_cast<double>(i));
    out[1] = std::sin(static_cast<double>(i));
  };
  const int before = thread_count();
  set_thread_count(1);
  const auto a = accumulate(n, 2, item, true);
  set_thread_count(7);
  const auto b = accumulate(n, 2, item, true);
  set_thread_count(before);
  CHECK(a.sum == b.sum);
  CHECK(a.sum_sq == b.sum_sq);
  const auto s = accumulate(n, 2, item, false, Backend::kSerial);
  CHECK(s.sum_sq.empty());
  CHECK(a.sum[0] == doctest::Approx(s.sum[0]).epsilon(1e-14));
  CHECK(a.sum[1] == doctest::Approx(s.sum[1]).epsilon(1e-12));
  CHECK(partition_count(n) == partition_count(n));
  CHECK(partition_count(0) <= 1);
}

TEST_CASE("parallel_for rethrows item exceptions") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), [&](std::size_t i) { hit[i] = 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(100,
                               [](std::size_t i) {
                                 if (i == 37) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("counter RNG is a pure function of its inputs") {
  CounterRng a(1), b(1), c(1, Stream::kTopology);
  CHECK(a.bits(5, 2) == b.bits(5, 2));
  CHECK(a.bits(5, 2) != c.bits(5, 2));
  CHECK(a.bits(5, 2) != a.bits(5, 3));
  double mean = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = a.uniform(i);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
  }
  mean /= n;
  CHECK(std::abs(mean - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
}

TEST_CASE("asserted q-algebra claims hold on random inputs") {
  for (const auto& c : run_claim_suite(3000, 19)) {
    INFO(c.name);
    CHECK(c.trials > 0);
    if (c.asserted) CHECK(c.passed());
  }
}

TEST_CASE("the unsquared distance-3 bound fails for K > 1") {
  const auto c = check_corruption_distance3_unsquared(20000, 3);
  CHECK_FALSE(c.asserted);
  CHECK(c.failures > 0);
  CHECK(c.worst_margin < 0);
}
