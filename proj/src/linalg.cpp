#include "cfn/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "cfn/error.hpp"

namespace cfn {

double asymmetry(const Matrix& a) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = i + 1; j < a.size(); ++j) {
      double scale = std::max({1.0, std::fabs(a(i, j)), std::fabs(a(j, i))});
      worst = std::max(worst, std::fabs(a(i, j) - a(j, i)) / scale);
    }
  }
  return worst;
}

namespace {

double off_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x * x;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const Matrix& input, JacobiStats* stats, double tol,
                                          int max_sweeps) {
  if (asymmetry(input) > 1e-12) throw ValidationError("eigenvalues need a symmetric matrix");
  Matrix a = input;
  const int n = a.size();
  const double target = tol * std::max(1.0, frobenius(a));
  int sweep = 0;
  double off = off_norm(a);
  while (off >= target) {
    if (sweep == max_sweeps) {
      throw DomainError("Jacobi iteration did not converge in " + std::to_string(max_sweeps) +
                        " sweeps");
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle from the standard stable formula.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
    ++sweep;
    off = off_norm(a);
  }
  if (stats) {
    stats->sweeps = sweep;
    stats->off_norm = off;
  }
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a(i, i);
  std::sort(out.begin(), out.end());
  return out;
}

bool GershgorinBounds::contains(double x) const {
  for (std::size_t i = 0; i < center.size(); ++i) {
    if (x >= center[i] - radius[i] && x <= center[i] + radius[i]) return true;
  }
  return false;
}

GershgorinBounds gershgorin_bounds(const Matrix& a, double tol) {
  if (asymmetry(a) > tol) throw ValidationError("Gershgorin bounds need a symmetric matrix");
  GershgorinBounds g;
  const int n = a.size();
  g.center.resize(n);
  g.radius.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    g.center[i] = a(i, i);
    for (int j = 0; j < n; ++j) {
      if (j != i) g.radius[i] += std::fabs(a(i, j));
    }
  }
  if (n > 0) {
    g.lower = g.center[0] - g.radius[0];
    g.upper = g.center[0] + g.radius[0];
    for (int i = 1; i < n; ++i) {
      g.lower = std::min(g.lower, g.center[i] - g.radius[i]);
      g.upper = std::max(g.upper, g.center[i] + g.radius[i]);
    }
  }
  return g;
}

}  // namespace cfn
