#pragma once

// Adversarial four-term blocks bounding a per-sample off-diagonal Hessian entry.
//
// A block over path positions lo..hi is
//   prod_{j=lo..hi} (1 - eta_j^2) / (1 + xi_j eta_j)^2   [ * (1 + xi_{hi+1} eta_{hi+1})^-2 ]
// with xi_lo = x replaced by a free input and xi_{j+1} = theta_hat_j q(eta_j, xi_j).
// W_i takes the sup over |x| <= x_max of the block lo = i-3, hi = i; the tail
// block W~_N also carries the bracketed factor; R_r keeps the true xi_0.

#include <vector>

#include "cfn/likelihood.hpp"

namespace cfn {

enum class SupMethod { kClosedForm, kGrid };

struct SupSearch {
  SupMethod method = SupMethod::kClosedForm;
  int grid_points = 2001;
  double golden_tol = 1e-13;
};

struct BlockInput {
  std::vector<double> eta;        // eta_lo..eta_hi, then eta_{hi+1} when tail
  std::vector<double> theta_hat;  // theta_hat_lo..theta_hat_{hi-1}, then theta_hat_hi when tail
  bool tail = false;
};

struct BlockSup {
  double value = 0.0;
  double argmax = 0.0;
};

double block_value(const BlockInput& in, double x);

// Running the backward recursion eta~_j = q(theta_hat_j eta~_{j+1}, eta_j) from
// the end of the block turns the block into
//   prod (1 - eta_j^2) / prod (1 + theta_hat_j eta_j eta~_{j+1})^2 / (1 + x eta~_lo)^2,
// whose sup over |x| <= x_max sits at x = -sign(eta~_lo) x_max.
BlockSup block_sup_closed_form(const BlockInput& in, double x_max);
// Dense grid on [-x_max, x_max] plus golden-section refinement around every
// grid-local maximum.
BlockSup block_sup_grid(const BlockInput& in, double x_max, int grid_points, double golden_tol);
BlockSup block_sup(const BlockInput& in, double x_max, const SupSearch& search);

// Backward signals eta~_lo..eta~_hi(+1) of a block, as used by the closed form.
std::vector<double> reversed_signals(const BlockInput& in);

// Block over positions lo..hi of a path (tail adds position hi + 1 = N + 1).
BlockInput path_block(const PathSignals& s, int lo, int hi, bool tail);

struct BlockTerms {
  int distance = 0;                 // N
  int r = 0;                        // (N + 1) mod 4, or N + 1 when N <= 2
  std::vector<int> w_index;         // i for each W_i, descending: N-4, N-8, ..., r+3
  std::vector<double> w;            // W_i
  std::vector<double> w_argmax;     // adversarial x per W_i
  double w_tilde = 0.0;             // W~_N (the true tail factor when N <= 2)
  double w_tilde_argmax = 0.0;
  double r_value = 1.0;             // R_r
  double product = 0.0;             // W~_N prod W_i R_r
  double path_bound = 0.0;          // the unblocked bound with true xi
  double hessian_abs = 0.0;         // |per-sample d2 l / dtheta_e dtheta_f|
};

// x_max = 1 - 2 c-hat delta. For N <= 2 there are no W blocks: W~ is the
// true tail factor and R covers positions 0..N.
BlockTerms block_decomposition(const PathSignals& s, double x_max,
                               const SupSearch& search = {});

// Sliding-window W_i for every i = 3..N (blocks lo = i - 3 .. hi = i).
std::vector<double> sliding_w(const PathSignals& s, double x_max, const SupSearch& search = {});

// Two consecutive terms:
//   F = (1 - eta1^2)(1 - eta2^2) / ((1 + xi2 eta2)^2 (1 + xi1 eta1)^2),
//   xi2 = theta1 q(eta1, xi1).
double pair_product(double theta1, double eta1, double eta2, double xi1);
BlockSup pair_sup(double theta1, double eta1, double eta2, double x_max,
                  const SupSearch& search = {});

}  // namespace cfn
