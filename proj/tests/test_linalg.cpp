#include <cmath>

#include "cfn/error.hpp"
#include "cfn/linalg.hpp"
#include "cfn/rng.hpp"
#include "doctest.h"

using namespace cfn;

TEST_CASE("eigenvalues of diagonal matrices") {
  Matrix id(3);
  for (int i = 0; i < 3; ++i) id(i, i) = 1.0;
  for (double l : symmetric_eigenvalues(id)) CHECK(l == 1.0);

  Matrix d(3);
  d(0, 0) = -3;
  d(1, 1) = 2;
  d(2, 2) = -1;
  CHECK(symmetric_eigenvalues(d) == std::vector<double>{-3, -1, 2});
}

TEST_CASE("random 2x2 eigenvalues match the quadratic formula") {
  CounterRng rng(5, Stream::kTest);
  for (std::uint64_t k = 0; k < 200; ++k) {
    const double a = rng.uniform(-5, 5, k, 0), b = rng.uniform(-5, 5, k, 1), c = rng.uniform(-5, 5, k, 2);
    Matrix m(2);
    m(0, 0) = a;
    m(0, 1) = m(1, 0) = b;
    m(1, 1) = c;
    const double mid = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const auto ev = symmetric_eigenvalues(m);
    CHECK(ev[0] == doctest::Approx(mid - rad).epsilon(1e-10).scale(1));
    CHECK(ev[1] == doctest::Approx(mid + rad).epsilon(1e-10).scale(1));
  }
}

TEST_CASE("eigenvalues preserve trace and Frobenius norm") {
  CounterRng rng(6, Stream::kTest);
  const int n = 9;
  Matrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-1, 1, i, j);
  }
  JacobiStats stats;
  const auto ev = symmetric_eigenvalues(m, &stats);
  double trace = 0, fro = 0, sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    trace += m(i, i);
    for (int j = 0; j < n; ++j) fro += m(i, j) * m(i, j);
  }
  for (double l : ev) {
    sum += l;
    sq += l * l;
  }
  CHECK(sum == doctest::Approx(trace).epsilon(1e-12));
  CHECK(sq == doctest::Approx(fro).epsilon(1e-12));
  CHECK(std::is_sorted(ev.begin(), ev.end()));
  CHECK(stats.sweeps > 0);
  const auto g = gershgorin_bounds(m);
  for (double l : ev) {
    CHECK(g.contains(l));
    CHECK(l >= g.lower - 1e-12);
    CHECK(l <= g.upper + 1e-12);
  }
}

TEST_CASE("gershgorin bounds") {
  Matrix m(2);
  m(0, 0) = m(1, 1) = -10;
  m(0, 1) = m(1, 0) = 1;
  const auto g = gershgorin_bounds(m);
  CHECK(g.lower == -11);
  CHECK(g.upper == -9);
  CHECK(g.radius == std::vector<double>{1, 1});
  CHECK(g.contains(-10.5));
  CHECK_FALSE(g.contains(0.0));
}

TEST_CASE("non-symmetric input is rejected") {
  Matrix m(2);
  m(0, 1) = 1;
  CHECK(asymmetry(m) == 1.0);
  CHECK_THROWS_AS(symmetric_eigenvalues(m), ValidationError);
  CHECK_THROWS_AS(gershgorin_bounds(m), ValidationError);
}
