#pragma once

// Small dense symmetric matrices: storage, Jacobi eigenvalues, Gershgorin disks.

#include <cstddef>
#include <vector>

namespace cfn {

class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int n, double fill = 0.0)
      : n_(n), data_(static_cast<std::size_t>(n) * n, fill) {}

  int size() const { return n_; }
  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  int n_ = 0;
  std::vector<double> data_;
};

// Largest |A_ij - A_ji| scaled by max(1, |A_ij|).
double asymmetry(const Matrix& a);

struct JacobiStats {
  int sweeps = 0;
  double off_norm = 0.0;
};

inline constexpr double kJacobiTolerance = 1e-12;
inline constexpr int kJacobiMaxSweeps = 1000;

// Cyclic Jacobi; returns eigenvalues in ascending order. The stopping rule is
// off-diagonal Frobenius norm < tol * max(1, ||A||_F). Throws ValidationError
// for non-symmetric input and DomainError if the sweep cap is reached.
std::vector<double> symmetric_eigenvalues(const Matrix& a, JacobiStats* stats = nullptr,
                                          double tol = kJacobiTolerance,
                                          int max_sweeps = kJacobiMaxSweeps);

struct GershgorinBounds {
  std::vector<double> center;
  std::vector<double> radius;  // sum over f != e of |A_ef|
  double lower = 0.0;          // min over rows of center - radius
  double upper = 0.0;          // max over rows of center + radius

  // True if x lies in at least one disk.
  bool contains(double x) const;
};

// Throws ValidationError when asymmetry(a) > tol.
GershgorinBounds gershgorin_bounds(const Matrix& a, double tol = 1e-12);

}  // namespace cfn
