#include "cfn/blocks.hpp"

#include <algorithm>
#include <cmath>

#include "cfn/error.hpp"
#include "cfn/magnetization.hpp"

namespace cfn {

namespace {

int block_length(const BlockInput& in) {
  return static_cast<int>(in.eta.size()) - (in.tail ? 1 : 0);
}

void check_block(const BlockInput& in) {
  const int len = block_length(in);
  const int need = in.tail ? len : len - 1;
  if (len < 1 || static_cast<int>(in.theta_hat.size()) != need) {
    throw ValidationError("block input has inconsistent eta / theta_hat lengths");
  }
}

double square(double x) { return x * x; }

}  // namespace

double block_value(const BlockInput& in, double x) {
  check_block(in);
  const int len = block_length(in);
  double xi = x;
  double prod = 1.0;
  for (int k = 0; k < len; ++k) {
    const double eta = in.eta[k];
    prod *= (1.0 - eta * eta) / square(1.0 + xi * eta);
    if (k + 1 < len || in.tail) xi = in.theta_hat[k] * q_combine(eta, xi);
  }
  if (in.tail) prod /= square(1.0 + xi * in.eta[len]);
  return prod;
}

std::vector<double> reversed_signals(const BlockInput& in) {
  check_block(in);
  const int last = static_cast<int>(in.eta.size()) - 1;
  std::vector<double> tilde(in.eta.size());
  tilde[last] = in.eta[last];
  for (int k = last - 1; k >= 0; --k) {
    tilde[k] = q_combine(in.theta_hat[k] * tilde[k + 1], in.eta[k]);
  }
  return tilde;
}

BlockSup block_sup_closed_form(const BlockInput& in, double x_max) {
  const auto tilde = reversed_signals(in);
  const int len = block_length(in);
  double num = 1.0;
  for (int k = 0; k < len; ++k) num *= 1.0 - in.eta[k] * in.eta[k];
  double den = 1.0;
  const int links = static_cast<int>(in.eta.size()) - 1;
  for (int k = 0; k < links; ++k) den *= square(1.0 + in.theta_hat[k] * in.eta[k] * tilde[k + 1]);
  BlockSup out;
  out.argmax = tilde[0] > 0 ? -x_max : (tilde[0] < 0 ? x_max : 0.0);
  out.value = num / den / square(1.0 - x_max * std::fabs(tilde[0]));
  return out;
}

BlockSup block_sup_grid(const BlockInput& in, double x_max, int grid_points, double golden_tol) {
  if (grid_points < 3) throw ValidationError("sup grid needs at least 3 points");
  const double step = 2.0 * x_max / (grid_points - 1);
  std::vector<double> values(grid_points);
  for (int k = 0; k < grid_points; ++k) values[k] = block_value(in, -x_max + k * step);

  BlockSup best{values[0], -x_max};
  for (int k = 0; k < grid_points; ++k) {
    const bool left_ok = k == 0 || values[k] >= values[k - 1];
    const bool right_ok = k == grid_points - 1 || values[k] >= values[k + 1];
    if (!(left_ok && right_ok)) continue;
    // Golden-section search on the bracket around the grid maximum.
    double a = -x_max + std::max(0, k - 1) * step;
    double b = -x_max + std::min(grid_points - 1, k + 1) * step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double d = a + g * (b - a);
    double fc = block_value(in, c);
    double fd = block_value(in, d);
    while (b - a > golden_tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = block_value(in, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = block_value(in, d);
      }
    }
    for (double x : {a, b, 0.5 * (a + b), -x_max + k * step}) {
      const double v = block_value(in, x);
      if (v > best.value) best = {v, x};
    }
  }
  return best;
}

BlockSup block_sup(const BlockInput& in, double x_max, const SupSearch& search) {
  if (!(x_max > 0.0 && x_max < 1.0)) throw ValidationError("sup range must lie in (0, 1)");
  return search.method == SupMethod::kClosedForm
             ? block_sup_closed_form(in, x_max)
             : block_sup_grid(in, x_max, search.grid_points, search.golden_tol);
}

BlockInput path_block(const PathSignals& s, int lo, int hi, bool tail) {
  if (lo < 0 || hi > s.distance || lo > hi) throw ValidationError("block range outside the path");
  BlockInput in;
  in.tail = tail;
  for (int j = lo; j <= hi; ++j) in.eta.push_back(s.eta[j]);
  for (int j = lo; j < hi; ++j) in.theta_hat.push_back(s.theta_hat[j]);
  if (tail) {
    in.eta.push_back(s.eta[hi + 1]);
    in.theta_hat.push_back(s.theta_hat[hi]);
  }
  return in;
}

namespace {

// prod_{j=lo..hi} (1 - eta_j^2) / (1 + xi_j eta_j)^2 with the true xi.
double true_product(const PathSignals& s, int lo, int hi) {
  double prod = 1.0;
  for (int j = lo; j <= hi; ++j) prod *= (1.0 - square(s.eta[j])) / square(1.0 + s.xi[j] * s.eta[j]);
  return prod;
}

}  // namespace

BlockTerms block_decomposition(const PathSignals& s, double x_max, const SupSearch& search) {
  const int n = s.distance;
  BlockTerms bt;
  bt.distance = n;
  bt.hessian_abs = std::fabs(hessian_offdiag(s));
  bt.path_bound = hessian_offdiag_bound(s);
  const double tail = 1.0 / square(1.0 + s.xi[n + 1] * s.eta[n + 1]);
  if (n <= 2) {
    bt.r = n + 1;
    bt.w_tilde = tail;
    bt.w_tilde_argmax = s.xi[std::max(0, n - 3)];
    bt.r_value = true_product(s, 0, n);
    bt.product = bt.w_tilde * bt.r_value;
    return bt;
  }
  bt.r = (n + 1) % 4;
  auto wt = block_sup(path_block(s, n - 3, n, true), x_max, search);
  bt.w_tilde = wt.value;
  bt.w_tilde_argmax = wt.argmax;
  bt.product = bt.w_tilde;
  for (int i = n - 4; i >= bt.r + 3; i -= 4) {
    auto w = block_sup(path_block(s, i - 3, i, false), x_max, search);
    bt.w_index.push_back(i);
    bt.w.push_back(w.value);
    bt.w_argmax.push_back(w.argmax);
    bt.product *= w.value;
  }
  bt.r_value = bt.r > 0 ? true_product(s, 0, bt.r - 1) : 1.0;
  bt.product *= bt.r_value;
  return bt;
}

std::vector<double> sliding_w(const PathSignals& s, double x_max, const SupSearch& search) {
  std::vector<double> out;
  for (int i = 3; i <= s.distance; ++i) {
    out.push_back(block_sup(path_block(s, i - 3, i, false), x_max, search).value);
  }
  return out;
}

double pair_product(double theta1, double eta1, double eta2, double xi1) {
  BlockInput in{{eta1, eta2}, {theta1}, false};
  return block_value(in, xi1);
}

BlockSup pair_sup(double theta1, double eta1, double eta2, double x_max,
                  const SupSearch& search) {
  BlockInput in{{eta1, eta2}, {theta1}, false};
  return block_sup(in, x_max, search);
}

}  // namespace cfn
