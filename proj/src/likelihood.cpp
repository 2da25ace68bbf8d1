#include "cfn/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>

#include "cfn/error.hpp"

namespace cfn {

LeafPatterns batch_patterns(const SampleBatch& batch) {
  if (batch.samples.empty()) throw ValidationError("sample batch is empty");
  LeafPatterns out;
  out.configs = batch.samples;
  out.weights.assign(batch.size(), 1.0 / static_cast<double>(batch.size()));
  return out;
}

LeafPatterns population_patterns(const Tree& tree, std::span<const double> theta_star, int cap) {
  LeafPatterns out;
  out.configs = enumerate_leaf_configs(tree, cap);
  out.weights.resize(out.configs.size());
  const auto count = static_cast<std::int64_t>(out.configs.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    out.weights[i] = leaf_config_probability(tree, theta_star, out.configs[i]);
  }
  return out;
}

// ---- per sample ------------------------------------------------------------

double edge_denominator(double theta_e, double zx, double zy) {
  const double den = 1.0 + theta_e * zx * zy;
  if (!(den >= kDenominatorFloor)) {
    std::ostringstream msg;
    msg << "1 + theta Z_x Z_y = " << den << " is below the floor " << kDenominatorFloor
        << " (theta = " << theta_e << ", Z_x Z_y = " << zx * zy << ")";
    throw DomainError(msg.str());
  }
  return den;
}

double edge_score(double theta_e, double zx, double zy) {
  return zx * zy / edge_denominator(theta_e, zx, zy);
}

double edge_curvature(double theta_e, double zx, double zy) {
  const double den = edge_denominator(theta_e, zx, zy);
  const double zz = zx * zy;
  return -(zz * zz) / (den * den);
}

PathSignals path_signals(const Tree& tree, std::span<const double> theta,
                         const MagnetizationTable& table, const PathDecomposition& pd) {
  const int n = pd.distance;
  PathSignals s;
  s.distance = n;
  s.xi.resize(n + 2);
  s.eta.resize(n + 2);
  s.theta_hat.resize(n + 1);
  const EdgeId e = pd.e;
  const EdgeId f = pd.f;
  const VertexId x = pd.y(n + 1);
  const VertexId y = pd.y(n);
  const VertexId v = pd.y(-1);
  s.theta_f = theta[f];
  s.zx = table.from(tree, e, x);
  s.zy = table.from(tree, e, y);
  s.zv = table.from(tree, f, v);
  s.xi[0] = theta[f] * s.zv;
  for (int j = 0; j <= n; ++j) {
    s.eta[j] = theta[pd.side_edge(j)] * table.from(tree, pd.side_edge(j), pd.w(j));
    s.theta_hat[j] = theta[pd.path_edge(j)];
    s.xi[j + 1] = s.theta_hat[j] * q_combine(s.eta[j], s.xi[j]);
  }
  s.eta[n + 1] = s.zx;
  return s;
}

PathSignals path_signals(const Tree& tree, std::span<const double> theta,
                         const LeafConfig& cfg, EdgeId e, EdgeId f) {
  auto table = directed_magnetizations(tree, theta, cfg);
  return path_signals(tree, theta, table, path_decomposition(tree, e, f));
}

namespace {

// prod_{j<=N} (1 - eta_j^2) / (1 + eta_j xi_j)^2.
double side_product(const PathSignals& s) {
  double prod = 1.0;
  for (int j = 0; j <= s.distance; ++j) {
    const double den = 1.0 + s.eta[j] * s.xi[j];
    if (!(den >= kDenominatorFloor)) throw DomainError("path denominator below floor");
    prod *= (1.0 - s.eta[j] * s.eta[j]) / (den * den);
  }
  return prod;
}

double tail_denominator(const PathSignals& s) {
  const int n = s.distance;
  const double den = 1.0 + s.xi[n + 1] * s.eta[n + 1];
  if (!(den >= kDenominatorFloor)) throw DomainError("1 + theta_e Z_x Z_y below floor");
  return den;
}

}  // namespace

double magnetization_derivative(const PathSignals& s) {
  double prod = s.zv;
  for (int j = 0; j < s.distance; ++j) prod *= s.theta_hat[j];
  return prod * side_product(s);
}

double hessian_offdiag(const PathSignals& s) {
  const double den = tail_denominator(s);
  return s.zx / (den * den) * magnetization_derivative(s);
}

double hessian_offdiag_bound(const PathSignals& s) {
  const double den = tail_denominator(s);
  return side_product(s) / (den * den);
}

PathCache::PathCache(const Tree& tree) : edge_count_(tree.edge_count()) {
  pairs_.resize(static_cast<std::size_t>(edge_count_) * edge_count_);
  for (EdgeId e = 0; e < edge_count_; ++e) {
    for (EdgeId f = e + 1; f < edge_count_; ++f) {
      pairs_[static_cast<std::size_t>(e) * edge_count_ + f] = path_decomposition(tree, e, f);
    }
  }
}

const PathDecomposition& PathCache::get(EdgeId e, EdgeId f) const {
  return pairs_[static_cast<std::size_t>(e) * edge_count_ + f];
}

double sample_log_likelihood(const Tree& tree, std::span<const double> theta,
                             const LeafConfig& cfg) {
  return leaf_config_log_probability(tree, theta, cfg);
}

void add_sample_gradient(const Tree& tree, std::span<const double> theta,
                         const MagnetizationTable& table, double weight, std::span<double> out) {
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const Edge& ed = tree.edge(e);
    out[e] += weight * edge_score(theta[e], table.from(tree, e, ed.a), table.from(tree, e, ed.b));
  }
}

std::size_t packed_size(int n) { return static_cast<std::size_t>(n) * (n + 1) / 2; }

namespace {

std::size_t packed_index(int n, int i, int j) {
  // Row i of the upper triangle starts after rows 0..i-1 of lengths n, n-1, ...
  return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i - 1) / 2 + (j - i);
}

// Same product as hessian_offdiag(path_signals(...)) without allocating.
double offdiag_entry(const Tree& tree, std::span<const double> theta,
                     const MagnetizationTable& table, const PathDecomposition& pd) {
  const int n = pd.distance;
  const EdgeId e = pd.e;
  const EdgeId f = pd.f;
  const double zx = table.from(tree, e, pd.y(n + 1));
  double xi = theta[f] * table.from(tree, f, pd.y(-1));
  double value = table.from(tree, f, pd.y(-1)) * zx;
  for (int j = 0; j <= n; ++j) {
    const double eta = theta[pd.side_edge(j)] * table.from(tree, pd.side_edge(j), pd.w(j));
    const double den = 1.0 + eta * xi;
    if (!(den >= kDenominatorFloor)) throw DomainError("path denominator below floor");
    value *= (1.0 - eta * eta) / (den * den);
    const double th = theta[pd.path_edge(j)];
    if (j < n) value *= th;
    xi = th * q_combine(eta, xi);
  }
  const double tail = 1.0 + xi * zx;
  if (!(tail >= kDenominatorFloor)) throw DomainError("1 + theta_e Z_x Z_y below floor");
  return value / (tail * tail);
}

}  // namespace

void add_sample_hessian(const Tree& tree, std::span<const double> theta,
                        const MagnetizationTable& table, const PathCache& paths, double weight,
                        std::span<double> out) {
  const int n = tree.edge_count();
  for (EdgeId e = 0; e < n; ++e) {
    const Edge& ed = tree.edge(e);
    out[packed_index(n, e, e)] +=
        weight * edge_curvature(theta[e], table.from(tree, e, ed.a), table.from(tree, e, ed.b));
    for (EdgeId f = e + 1; f < n; ++f) {
      out[packed_index(n, e, f)] += weight * offdiag_entry(tree, theta, table, paths.get(e, f));
    }
  }
}

Matrix unpack_symmetric(int n, std::span<const double> packed) {
  Matrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      m(i, j) = packed[packed_index(n, i, j)];
      m(j, i) = m(i, j);
    }
  }
  return m;
}

// ---- batch / population ----------------------------------------------------

const char* quantity_name(Quantity q) {
  switch (q) {
    case Quantity::kLogLik:
      return "loglik";
    case Quantity::kGradient:
      return "gradient";
    case Quantity::kHessian:
      return "hessian";
  }
  return "?";
}

Matrix Estimate::matrix() const {
  if (what != Quantity::kHessian) throw ValidationError("estimate is not a matrix");
  Matrix m(edge_count);
  m.data() = value;
  return m;
}

Matrix Estimate::se_matrix() const {
  if (what != Quantity::kHessian || se.empty()) throw ValidationError("no matrix standard errors");
  Matrix m(edge_count);
  m.data() = se;
  return m;
}

namespace {

std::size_t quantity_dim(Quantity what, int edges) {
  switch (what) {
    case Quantity::kLogLik:
      return 1;
    case Quantity::kGradient:
      return static_cast<std::size_t>(edges);
    case Quantity::kHessian:
      return packed_size(edges);
  }
  return 0;
}

// Adds weight * (per-sample quantity for cfg) into out.
void add_quantity(const Tree& tree, std::span<const double> theta, const LeafConfig& cfg,
                  Quantity what, const PathCache* paths, double weight, std::span<double> out) {
  if (what == Quantity::kLogLik) {
    const double lp = sample_log_likelihood(tree, theta, cfg);
    if (!std::isfinite(lp)) {
      throw DomainError("leaf pattern has probability 0 under theta (some |theta_e| = 1)");
    }
    out[0] += weight * lp;
    return;
  }
  auto table = directed_magnetizations(tree, theta, cfg);
  if (what == Quantity::kGradient) {
    add_sample_gradient(tree, theta, table, weight, out);
  } else {
    add_sample_hessian(tree, theta, table, *paths, weight, out);
  }
}

Estimate finish(Quantity what, int edges, std::vector<double> value, std::vector<double> se,
                std::size_t samples) {
  Estimate est;
  est.what = what;
  est.edge_count = edges;
  est.samples = samples;
  if (what == Quantity::kHessian) {
    est.value = unpack_symmetric(edges, value).data();
    if (!se.empty()) est.se = unpack_symmetric(edges, se).data();
  } else {
    est.value = std::move(value);
    est.se = std::move(se);
  }
  return est;
}

void check_theta(const Tree& tree, std::span<const double> theta, const char* name) {
  if (static_cast<int>(theta.size()) != tree.edge_count()) {
    throw ValidationError(std::string(name) + " has " + std::to_string(theta.size()) +
                          " entries, tree has " + std::to_string(tree.edge_count()) + " edges");
  }
}

}  // namespace

Estimate evaluate(const Tree& tree, std::span<const double> theta, const LeafPatterns& patterns,
                  Quantity what, Backend backend) {
  check_theta(tree, theta, "theta");
  const int edges = tree.edge_count();
  std::optional<PathCache> paths;
  if (what == Quantity::kHessian) paths.emplace(tree);
  const PathCache* cache = paths ? &*paths : nullptr;
  auto acc = accumulate(
      patterns.size(), quantity_dim(what, edges),
      [&](std::size_t i, std::span<double> out) {
        if (patterns.weights[i] == 0.0) return;
        add_quantity(tree, theta, patterns.configs[i], what, cache, patterns.weights[i], out);
      },
      false, backend);
  return finish(what, edges, std::move(acc.sum), {}, patterns.size());
}

double log_likelihood(const Tree& tree, std::span<const double> theta, const SampleBatch& batch) {
  return evaluate(tree, theta, batch_patterns(batch), Quantity::kLogLik).loglik();
}

std::vector<double> gradient(const Tree& tree, std::span<const double> theta,
                             const SampleBatch& batch) {
  return evaluate(tree, theta, batch_patterns(batch), Quantity::kGradient).value;
}

Matrix hessian(const Tree& tree, std::span<const double> theta, const SampleBatch& batch) {
  return evaluate(tree, theta, batch_patterns(batch), Quantity::kHessian).matrix();
}

Estimate expected_exact(const Tree& tree, std::span<const double> theta_star,
                        std::span<const double> theta_hat, Quantity what, int cap,
                        Backend backend) {
  check_theta(tree, theta_star, "theta*");
  return evaluate(tree, theta_hat, population_patterns(tree, theta_star, cap), what, backend);
}

Estimate expected_mc(const Tree& tree, std::span<const double> theta_star,
                     std::span<const double> theta_hat, std::size_t m, std::uint64_t seed,
                     Quantity what, Backend backend) {
  check_theta(tree, theta_star, "theta*");
  check_theta(tree, theta_hat, "theta-hat");
  if (m < 2) throw ValidationError("Monte Carlo estimates need m >= 2");
  const int edges = tree.edge_count();
  std::optional<PathCache> paths;
  if (what == Quantity::kHessian) paths.emplace(tree);
  const PathCache* cache = paths ? &*paths : nullptr;
  auto acc = accumulate(
      m, quantity_dim(what, edges),
      [&](std::size_t i, std::span<double> out) {
        auto cfg = restrict_to_leaves(tree, sample_spins(tree, theta_star, seed, i));
        add_quantity(tree, theta_hat, cfg, what, cache, 1.0, out);
      },
      true, backend);
  const double md = static_cast<double>(m);
  std::vector<double> mean(acc.sum.size()), se(acc.sum.size());
  for (std::size_t k = 0; k < mean.size(); ++k) {
    mean[k] = acc.sum[k] / md;
    const double var = std::max(0.0, (acc.sum_sq[k] - md * mean[k] * mean[k]) / (md - 1.0));
    se[k] = std::sqrt(var / md);
  }
  return finish(what, edges, std::move(mean), std::move(se), m);
}

// ---- finite differences ----------------------------------------------------

FdResult central_differences(const ScalarFn& f, std::span<const double> x0, double h_grad,
                             double h_hess) {
  if (!(h_grad > 0.0) || !(h_hess > 0.0)) throw ValidationError("finite-difference step must be > 0");
  const int n = static_cast<int>(x0.size());
  std::vector<double> x(x0.begin(), x0.end());
  auto at = [&](int i, double di, int j, double dj) {
    std::vector<double> y = x;
    if (i >= 0) y[i] += di;
    if (j >= 0) y[j] += dj;
    return f(y);
  };
  FdResult out;
  out.gradient.resize(n);
  out.hessian = Matrix(n);
  const double f0 = f(x);
  for (int i = 0; i < n; ++i) {
    out.gradient[i] = (at(i, h_grad, -1, 0) - at(i, -h_grad, -1, 0)) / (2.0 * h_grad);
    out.hessian(i, i) =
        (at(i, h_hess, -1, 0) - 2.0 * f0 + at(i, -h_hess, -1, 0)) / (h_hess * h_hess);
    for (int j = i + 1; j < n; ++j) {
      const double v = (at(i, h_hess, j, h_hess) - at(i, h_hess, j, -h_hess) -
                        at(i, -h_hess, j, h_hess) + at(i, -h_hess, j, -h_hess)) /
                       (4.0 * h_hess * h_hess);
      out.hessian(i, j) = v;
      out.hessian(j, i) = v;
    }
  }
  return out;
}

FdResult fd_oracle(const Tree& tree, std::span<const double> theta, const LeafPatterns& patterns,
                   double h_grad, double h_hess) {
  check_theta(tree, theta, "theta");
  const double h = std::max(h_grad, h_hess);
  for (double t : theta) {
    if (std::fabs(t) + h >= 1.0) {
      throw DomainError("finite-difference step leaves (-1, 1); use a smaller h");
    }
  }
  // Plain serial sum of log-probabilities from the pruning tables, so the
  // oracle shares no code with the magnetization path.
  auto f = [&](std::span<const double> th) {
    double s = 0.0;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      s += patterns.weights[i] * leaf_config_log_probability(tree, th, patterns.configs[i]);
    }
    return s;
  };
  return central_differences(f, theta, h_grad, h_hess);
}

namespace {

// Unnormalized sum-product in long double; fine for the small trees the
// oracle is used on.
long double pattern_probability(const Tree& tree, const std::vector<long double>& theta,
                                const LeafConfig& cfg, const RootedOrder& ro) {
  std::vector<std::array<long double, 2>> table(tree.vertex_count(), {1.0L, 1.0L});
  for (VertexId v : tree.leaves()) {
    table[v] = cfg[tree.leaf_index(v)] > 0 ? std::array{1.0L, 0.0L} : std::array{0.0L, 1.0L};
  }
  for (auto it = ro.order.rbegin(); it != ro.order.rend(); ++it) {
    VertexId v = *it;
    VertexId parent = ro.parent[v];
    if (parent < 0) break;
    const long double t = theta[ro.parent_edge[v]];
    const long double stay = 0.5L * (1.0L + t);
    const long double flip = 0.5L * (1.0L - t);
    table[parent][0] *= stay * table[v][0] + flip * table[v][1];
    table[parent][1] *= flip * table[v][0] + stay * table[v][1];
  }
  return 0.5L * (table[ro.root][0] + table[ro.root][1]);
}

}  // namespace

FdResult multilinear_oracle(const Tree& tree, std::span<const double> theta,
                            const LeafPatterns& patterns) {
  check_theta(tree, theta, "theta");
  const int n = tree.edge_count();
  const auto ro = rooted_order(tree, tree.default_root());
  std::vector<long double> grad(n, 0.0L);
  std::vector<long double> hess(static_cast<std::size_t>(n) * n, 0.0L);
  std::vector<long double> th(theta.begin(), theta.end());
  std::vector<long double> dp(n);
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const long double w = patterns.weights[i];
    if (w == 0.0L) continue;
    const auto& cfg = patterns.configs[i];
    const long double p = pattern_probability(tree, th, cfg, ro);
    if (!(p > 0.0L)) throw DomainError("leaf pattern has probability 0 under theta");
    for (int e = 0; e < n; ++e) {
      auto corner = th;
      corner[e] = 1.0L;
      const long double hi = pattern_probability(tree, corner, cfg, ro);
      corner[e] = -1.0L;
      const long double lo = pattern_probability(tree, corner, cfg, ro);
      dp[e] = (hi - lo) / 2.0L;
      grad[e] += w * dp[e] / p;
    }
    for (int e = 0; e < n; ++e) {
      // P is affine in theta_e, so d2P/dtheta_e2 = 0.
      hess[static_cast<std::size_t>(e) * n + e] -= w * (dp[e] / p) * (dp[e] / p);
      for (int f = e + 1; f < n; ++f) {
        long double acc = 0.0L;
        for (int se : {1, -1}) {
          for (int sf : {1, -1}) {
            auto corner = th;
            corner[e] = se;
            corner[f] = sf;
            acc += se * sf * pattern_probability(tree, corner, cfg, ro);
          }
        }
        const long double dpef = acc / 4.0L;
        const long double v = w * (dpef / p - (dp[e] / p) * (dp[f] / p));
        hess[static_cast<std::size_t>(e) * n + f] += v;
        hess[static_cast<std::size_t>(f) * n + e] += v;
      }
    }
  }
  FdResult out;
  out.gradient.assign(grad.begin(), grad.end());
  out.hessian = Matrix(n);
  for (std::size_t k = 0; k < hess.size(); ++k) out.hessian.data()[k] = static_cast<double>(hess[k]);
  return out;
}

Discrepancy compare_relative(std::span<const double> value, std::span<const double> reference,
                             double floor) {
  if (value.size() != reference.size()) throw ValidationError("compared arrays differ in size");
  Discrepancy d;
  for (std::size_t k = 0; k < value.size(); ++k) {
    const double err = std::fabs(value[k] - reference[k]);
    d.max_absolute = std::max(d.max_absolute, err);
    if (std::fabs(reference[k]) > floor) {
      d.max_relative = std::max(d.max_relative, err / std::fabs(reference[k]));
      ++d.compared;
    }
  }
  return d;
}

}  // namespace cfn
