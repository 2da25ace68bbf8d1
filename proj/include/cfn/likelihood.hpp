#pragma once

// Leaf log-likelihood and its derivatives in closed form via magnetizations.
//
// For e = {x, y}, Z_x = Z(x -> y) and Z_y = Z(y -> x); the per-sample
// likelihood is proportional to 1 + theta_e Z_x Z_y with a factor free of
// theta_e, which gives the gradient Z_x Z_y / (1 + theta_e Z_x Z_y).

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cfn/kernels.hpp"
#include "cfn/linalg.hpp"
#include "cfn/magnetization.hpp"
#include "cfn/model.hpp"
#include "cfn/tree.hpp"

namespace cfn {

inline constexpr double kDenominatorFloor = 1e-12;
inline constexpr int kExactLeafCap = 14;

// A weighted set of leaf patterns: a sample batch (weights 1/m) or the full
// population under some theta* (weights P(cfg)).
struct LeafPatterns {
  std::vector<LeafConfig> configs;
  std::vector<double> weights;

  std::size_t size() const { return configs.size(); }
};
LeafPatterns batch_patterns(const SampleBatch& batch);
LeafPatterns population_patterns(const Tree& tree, std::span<const double> theta_star,
                                 int cap = kExactLeafCap);

// ---- per sample ------------------------------------------------------------

// 1 + theta_e Z_x Z_y, checked against the floor.
double edge_denominator(double theta_e, double zx, double zy);
double edge_score(double theta_e, double zx, double zy);
double edge_curvature(double theta_e, double zx, double zy);

// Signals along the path from f to e (see PathDecomposition for the layout).
//   eta_j = theta_{y_j w_j} Z(w_j -> y_j),        j = 0..N
//   eta_{N+1} = Z(x -> y)
//   xi_0 = theta_f Z(v -> u)
//   xi_{j+1} = theta_hat_j q(eta_j, xi_j),          theta_hat_j = theta_{y_j y_{j+1}}
// so theta_hat_N = theta_e and xi_{N+1} eta_{N+1} = theta_e Z_x Z_y.
struct PathSignals {
  int distance = 0;
  std::vector<double> xi;         // N + 2 entries
  std::vector<double> eta;        // N + 2 entries
  std::vector<double> theta_hat;  // N + 1 entries
  double theta_f = 0.0;
  double zx = 0.0;                // Z(x -> y)
  double zy = 0.0;                // Z(y -> x)
  double zv = 0.0;                // Z(v -> u)
};
PathSignals path_signals(const Tree& tree, std::span<const double> theta,
                         const MagnetizationTable& table, const PathDecomposition& pd);
PathSignals path_signals(const Tree& tree, std::span<const double> theta,
                         const LeafConfig& cfg, EdgeId e, EdgeId f);

// dZ_y / dtheta_f = Z_v prod_{j<N} theta_hat_j prod_{j<=N} (1 - eta_j^2) / (1 + eta_j xi_j)^2.
double magnetization_derivative(const PathSignals& s);
// d^2 l / dtheta_e dtheta_f = Z_x / (1 + theta_e Z_x Z_y)^2 * dZ_y / dtheta_f.
double hessian_offdiag(const PathSignals& s);
// (1 + xi_{N+1} eta_{N+1})^-2 prod_{j<=N} (1 - eta_j^2) / (1 + eta_j xi_j)^2.
double hessian_offdiag_bound(const PathSignals& s);

// Path decompositions for every unordered pair e < f, computed once per tree.
class PathCache {
 public:
  explicit PathCache(const Tree& tree);
  const PathDecomposition& get(EdgeId e, EdgeId f) const;  // requires e < f
  int edge_count() const { return edge_count_; }

 private:
  int edge_count_ = 0;
  std::vector<PathDecomposition> pairs_;
};

double sample_log_likelihood(const Tree& tree, std::span<const double> theta,
                             const LeafConfig& cfg);
// out[e] += weight * score_e.
void add_sample_gradient(const Tree& tree, std::span<const double> theta,
                         const MagnetizationTable& table, double weight, std::span<double> out);
// out is the packed upper triangle (row-major, e <= f); out += weight * H.
void add_sample_hessian(const Tree& tree, std::span<const double> theta,
                        const MagnetizationTable& table, const PathCache& paths, double weight,
                        std::span<double> out);
Matrix unpack_symmetric(int n, std::span<const double> packed);
std::size_t packed_size(int n);

// ---- batch / population ----------------------------------------------------

enum class Quantity { kLogLik, kGradient, kHessian };
const char* quantity_name(Quantity q);

struct Estimate {
  Quantity what = Quantity::kLogLik;
  int edge_count = 0;
  std::vector<double> value;  // 1, E or E*E (row-major) entries
  std::vector<double> se;     // same shape; empty for exact evaluation
  std::size_t samples = 0;

  double loglik() const { return value.at(0); }
  Matrix matrix() const;
  Matrix se_matrix() const;
};

// Weighted sum over patterns of the per-sample quantity.
Estimate evaluate(const Tree& tree, std::span<const double> theta, const LeafPatterns& patterns,
                  Quantity what, Backend backend = Backend::kParallel);

double log_likelihood(const Tree& tree, std::span<const double> theta, const SampleBatch& batch);
std::vector<double> gradient(const Tree& tree, std::span<const double> theta,
                             const SampleBatch& batch);
Matrix hessian(const Tree& tree, std::span<const double> theta, const SampleBatch& batch);

// Population expectation under theta*, summing over all 2^n leaf patterns.
Estimate expected_exact(const Tree& tree, std::span<const double> theta_star,
                        std::span<const double> theta_hat, Quantity what,
                        int cap = kExactLeafCap, Backend backend = Backend::kParallel);
// Sample mean and standard error over m broadcasts from theta*.
Estimate expected_mc(const Tree& tree, std::span<const double> theta_star,
                     std::span<const double> theta_hat, std::size_t m, std::uint64_t seed,
                     Quantity what, Backend backend = Backend::kParallel);

// ---- finite-difference oracle ----------------------------------------------

inline constexpr double kFdGradientStep = 1e-5;
inline constexpr double kFdHessianStep = 1e-4;

struct FdResult {
  std::vector<double> gradient;
  Matrix hessian;
};

using ScalarFn = std::function<double(std::span<const double>)>;
// Central differences of f at x: gradient with step h_grad, Hessian from
// second and mixed central differences with step h_hess.
FdResult central_differences(const ScalarFn& f, std::span<const double> x, double h_grad,
                             double h_hess);

// Central differences of the batch log-likelihood. Throws DomainError when a
// step would leave (-1, 1).
FdResult fd_oracle(const Tree& tree, std::span<const double> theta, const LeafPatterns& patterns,
                   double h_grad = kFdGradientStep, double h_hess = kFdHessianStep);

// Per-sample probability P(theta) is affine in each theta_e, so for any two
// values a != b, (P(.., a, ..) - P(.., b, ..)) / (a - b) is the exact partial
// derivative. Taking a = +1 and b = -1 (and the four corners for a pair) gives
// dP, d2P, and from them the log-likelihood gradient and Hessian, with only
// roundoff error. Probabilities use long double pruning with no magnetizations.
FdResult multilinear_oracle(const Tree& tree, std::span<const double> theta,
                            const LeafPatterns& patterns);

struct Discrepancy {
  double max_relative = 0.0;  // over entries with |reference| > floor
  double max_absolute = 0.0;  // over all entries
  std::size_t compared = 0;   // entries above the floor
};
Discrepancy compare_relative(std::span<const double> value, std::span<const double> reference,
                             double floor = 1e-8);

}  // namespace cfn
