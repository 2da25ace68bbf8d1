#include "cfn/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "cfn/error.hpp"
#include "cfn/kernels.hpp"
#include "cfn/magnetization.hpp"

namespace cfn {

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "exact") return EvalMode::kExact;
  if (name == "mc") return EvalMode::kMc;
  throw ValidationError("unknown mode '" + name + "' (expected exact or mc)");
}

const char* eval_mode_name(EvalMode m) { return m == EvalMode::kExact ? "exact" : "mc"; }

ThetaHatMode parse_theta_hat_mode(const std::string& name) {
  if (name == "truth") return ThetaHatMode::kTruth;
  if (name == "box") return ThetaHatMode::kBox;
  throw ValidationError("unknown theta-hat mode '" + name + "' (expected truth or box)");
}

const char* theta_hat_mode_name(ThetaHatMode m) {
  return m == ThetaHatMode::kTruth ? "truth" : "box";
}

ParamDraw draw_params(const Tree& tree, const RegimeBox& box, ThetaHatMode mode,
                      std::uint64_t seed) {
  ParamDraw d;
  d.truth = sample_edge_params(tree, box, Role::kTruth, seed);
  if (mode == ThetaHatMode::kTruth) {
    d.estimate = d.truth;
    d.estimate.role = Role::kEstimate;
  } else {
    d.estimate = sample_edge_params(tree, box, Role::kEstimate, seed);
  }
  return d;
}

namespace {

SlopeFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit fit;
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.valid = true;
  return fit;
}

double square(double x) { return x * x; }

}  // namespace

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
    if (x[k] > 0.0 && y[k] > 0.0) {
      lx.push_back(std::log(x[k]));
      ly.push_back(std::log(y[k]));
    }
  }
  return least_squares(lx, ly);
}

SlopeFit semilog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < std::min(x.size(), y.size()); ++k) {
    if (y[k] > 0.0) {
      lx.push_back(x[k]);
      ly.push_back(std::log(y[k]));
    }
  }
  return least_squares(lx, ly);
}

// ---- reconstruction tiers --------------------------------------------------

const char* tier_name(Tier t) {
  switch (t) {
    case Tier::kGood: return "good";
    case Tier::kModerate: return "moderate";
    case Tier::kSevere: return "severe";
  }
  return "?";
}

Tier classify_tier(double signed_mag, double delta, const TierThresholds& t) {
  if (signed_mag >= 1.0 - t.good_multiplier * t.k_good * delta * delta) return Tier::kGood;
  if (signed_mag <= -t.c_severe) return Tier::kSevere;
  return Tier::kModerate;
}

std::vector<TierReport> reconstruction_experiment(const Tree& tree, VertexId node,
                                                  VertexId parent,
                                                  const ReconstructionConfig& cfg) {
  if (node < 0 || node >= tree.vertex_count() || tree.is_leaf(node)) {
    throw ValidationError("reconstruction node must be an internal vertex");
  }
  if (tree.edge_between(node, parent) < 0) {
    throw ValidationError("reconstruction parent must be a neighbor of the node");
  }
  std::array<VertexId, 2> child{};
  int nc = 0;
  for (VertexId w : tree.neighbors(node)) {
    if (w != parent) child[nc++] = w;
  }
  if (cfg.m == 0) throw ValidationError("reconstruction experiment needs m >= 1");

  std::vector<TierReport> out;
  for (double delta : cfg.deltas) {
    RegimeBox box = cfg.box;
    box.delta = delta;
    const auto params = draw_params(tree, box, cfg.theta_hat, cfg.seed);
    // Columns: good, moderate, severe, child x negative, child y negative, both.
    auto acc = accumulate(
        cfg.m, 6,
        [&](std::size_t i, std::span<double> row) {
          const auto spins = sample_spins(tree, params.truth, cfg.seed, i);
          const auto leaves = restrict_to_leaves(tree, spins);
          const auto z = upward_magnetizations(tree, params.estimate, leaves, parent);
          const double s = spins[node];
          row[static_cast<int>(classify_tier(s * z[node], delta, cfg.thresholds))] = 1.0;
          const bool nx = s * z[child[0]] < 0.0;
          const bool ny = s * z[child[1]] < 0.0;
          row[3] = nx;
          row[4] = ny;
          row[5] = nx && ny;
        },
        false);
    TierReport r;
    r.delta = delta;
    r.thresholds = cfg.thresholds;
    r.m = cfg.m;
    r.node = node;
    const double md = static_cast<double>(cfg.m);
    for (int k = 0; k < 3; ++k) {
      r.counts[k] = static_cast<std::size_t>(std::llround(acc.sum[k]));
      r.frequency[k] = acc.sum[k] / md;
    }
    r.child_negative = {acc.sum[3] / md, acc.sum[4] / md};
    r.joint_negative = acc.sum[5] / md;
    out.push_back(r);
  }
  return out;
}

// ---- block bound -----------------------------------------------------------

BlockTerms block_decomposition(const Tree& tree, std::span<const double> theta_hat,
                               const LeafConfig& cfg, EdgeId e, EdgeId f, const RegimeBox& box,
                               const SupSearch& search) {
  const auto s = path_signals(tree, theta_hat, cfg, e, f);
  return block_decomposition(s, 1.0 - 2.0 * box.estimate_lo * box.delta, search);
}

double w_ceiling(const RegimeBox& box) {
  return square(std::max(16.0, 8.0 / (2.0 * box.estimate_lo)) / box.delta);
}

DominanceReport dominance_experiment(const Tree& tree, const DominanceConfig& cfg) {
  cfg.box.validate();
  const auto params = draw_params(tree, cfg.box, cfg.theta_hat, cfg.seed);
  const double x_max = 1.0 - 2.0 * cfg.box.estimate_lo * cfg.box.delta;
  const double ceiling = w_ceiling(cfg.box);

  // Both orientations of every qualifying pair.
  std::vector<PathDecomposition> pds;
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    for (EdgeId f = 0; f < tree.edge_count(); ++f) {
      if (e != f && edge_distance(tree, e, f) >= cfg.min_distance) {
        pds.push_back(path_decomposition(tree, e, f));
      }
    }
  }

  struct Row {
    std::size_t violations = 0;
    std::size_t w_blocks = 0;
    std::size_t ceiling_violations = 0;
    double worst_ratio = 0.0;
    double max_w_over_ceiling = 0.0;
  };
  std::vector<Row> rows(cfg.samples);
  parallel_for(cfg.samples, [&](std::size_t i) {
    const auto leaves = restrict_to_leaves(tree, sample_spins(tree, params.truth, cfg.seed, i));
    const auto table = directed_magnetizations(tree, params.estimate, leaves);
    Row& row = rows[i];
    for (const auto& pd : pds) {
      const auto s = path_signals(tree, params.estimate, table, pd);
      const auto bt = block_decomposition(s, x_max, cfg.search);
      if (bt.product < bt.hessian_abs) ++row.violations;
      if (bt.product > 0.0) row.worst_ratio = std::max(row.worst_ratio, bt.hessian_abs / bt.product);
      for (double w : bt.w) {
        ++row.w_blocks;
        if (w > ceiling) ++row.ceiling_violations;
        row.max_w_over_ceiling = std::max(row.max_w_over_ceiling, w / ceiling);
      }
    }
  });

  DominanceReport rep;
  rep.samples = cfg.samples;
  rep.pairs = pds.size();
  rep.checks = cfg.samples * pds.size();
  for (const auto& row : rows) {
    rep.violations += row.violations;
    rep.w_blocks += row.w_blocks;
    rep.ceiling_violations += row.ceiling_violations;
    rep.worst_ratio = std::max(rep.worst_ratio, row.worst_ratio);
    rep.max_w_over_ceiling = std::max(rep.max_w_over_ceiling, row.max_w_over_ceiling);
  }
  return rep;
}

// ---- W tiers ---------------------------------------------------------------

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

}  // namespace

WTierReport w_tier_experiment(const Tree& tree, EdgeId e, EdgeId f, const WTierConfig& cfg) {
  const auto pd = path_decomposition(tree, e, f);
  if (pd.distance < 3) throw ValidationError("W tiers need edge distance N >= 3");
  if (cfg.m == 0) throw ValidationError("W tier experiment needs m >= 1");
  if (cfg.k && !(*cfg.k > 0.0)) throw ValidationError("band constant K must be positive");

  WTierReport rep;
  rep.e = e;
  rep.f = f;
  rep.distance = pd.distance;
  for (int i = 3; i <= pd.distance; ++i) rep.w_index.push_back(i);
  const std::size_t per_sample = rep.w_index.size();

  std::vector<std::vector<double>> values(cfg.deltas.size());
  for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
    RegimeBox box = cfg.box;
    box.delta = cfg.deltas[k];
    const auto params = draw_params(tree, box, cfg.theta_hat, cfg.seed);
    const double x_max = 1.0 - 2.0 * box.estimate_lo * box.delta;
    auto& w = values[k];
    w.resize(cfg.m * per_sample);
    parallel_for(cfg.m, [&](std::size_t i) {
      const auto leaves = restrict_to_leaves(tree, sample_spins(tree, params.truth, cfg.seed, i));
      const auto table = directed_magnetizations(tree, params.estimate, leaves);
      const auto s = path_signals(tree, params.estimate, table, pd);
      const auto row = sliding_w(s, x_max, cfg.search);
      std::copy(row.begin(), row.end(), w.begin() + static_cast<std::ptrdiff_t>(i * per_sample));
    });
  }

  std::vector<double> medians;
  double top = 0.0;
  for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
    std::vector<double> scaled(values[k]);
    for (double& v : scaled) v /= square(cfg.deltas[k]);
    medians.push_back(median(std::move(scaled)));
    top = std::max(top, cfg.deltas[k] * *std::max_element(values[k].begin(), values[k].end()));
  }
  rep.k_fitted = !cfg.k.has_value();
  rep.k = cfg.k ? *cfg.k : kWBandFraction * top;
  if (!(rep.k > 0.0)) throw DomainError("every W value is zero; no band constant to fit");

  std::array<std::vector<double>, 4> exceed;
  std::vector<double> means;
  for (std::size_t k = 0; k < cfg.deltas.size(); ++k) {
    const double d = cfg.deltas[k];
    const std::array<double, 4> edge{rep.k * d * d, rep.k, rep.k / d, rep.k / (d * d)};
    WTierRow row;
    row.delta = d;
    row.count = values[k].size();
    row.median_over_d2 = medians[k];
    double total = 0.0;
    for (double w : values[k]) {
      total += w;
      row.max = std::max(row.max, w);
      int band = 0;
      while (band < 4 && w > edge[band]) ++band;
      ++row.band[band];
    }
    row.mean = total / static_cast<double>(row.count);
    means.push_back(row.mean);
    rep.k_mean = std::max(rep.k_mean, std::sqrt(row.mean / d));
    std::size_t above = row.count;
    for (int b = 0; b < 4; ++b) {
      above -= row.band[b];
      row.exceed[b] = static_cast<double>(above) / static_cast<double>(row.count);
      exceed[b].push_back(row.exceed[b]);
    }
    rep.rows.push_back(row);
  }
  rep.mean_slope = loglog_slope(cfg.deltas, means);
  for (int b = 0; b < 4; ++b) rep.exceed_slope[b] = loglog_slope(cfg.deltas, exceed[b]);
  return rep;
}

// ---- expected Hessian ------------------------------------------------------

namespace {

Estimate expected_hessian(const Tree& tree, const ParamDraw& params, const HessianConfig& cfg) {
  if (cfg.mode == EvalMode::kExact) {
    return expected_exact(tree, params.truth, params.estimate, Quantity::kHessian);
  }
  return expected_mc(tree, params.truth, params.estimate, cfg.m, cfg.seed, Quantity::kHessian);
}

}  // namespace

HessianReport hessian_report(const Tree& tree, const HessianConfig& cfg) {
  cfg.box.validate();
  const auto params = draw_params(tree, cfg.box, cfg.theta_hat, cfg.seed);
  const auto est = expected_hessian(tree, params, cfg);
  const int n = tree.edge_count();

  HessianReport rep;
  rep.delta = cfg.box.delta;
  rep.mode = cfg.mode;
  rep.theta_star = params.truth.theta;
  rep.theta_hat = params.estimate.theta;
  rep.h = est.matrix();
  rep.se = est.se.empty() ? Matrix(n) : est.se_matrix();
  rep.gershgorin = gershgorin_bounds(rep.h);
  rep.eigenvalues = symmetric_eigenvalues(rep.h);

  rep.diagonally_dominant = true;
  rep.min_abs_diag = std::numeric_limits<double>::infinity();
  for (int e = 0; e < n; ++e) {
    rep.diagonally_dominant =
        rep.diagonally_dominant && rep.gershgorin.radius[e] < std::fabs(rep.h(e, e));
    rep.min_abs_diag = std::min(rep.min_abs_diag, std::fabs(rep.h(e, e)));
  }
  rep.eigen_in_disks = std::all_of(rep.eigenvalues.begin(), rep.eigenvalues.end(),
                                   [&](double l) { return rep.gershgorin.contains(l); });

  std::map<int, DistanceGroup> groups;
  for (int e = 0; e < n; ++e) {
    for (int f = e + 1; f < n; ++f) {
      const int d = edge_distance(tree, e, f);
      auto& g = groups[d];
      g.distance = d;
      g.envelope_index = std::max(d - 1, 0) / 4;
      ++g.count;
      const double a = std::fabs(rep.h(e, f));
      g.max_abs = std::max(g.max_abs, a);
      g.mean_abs += a;
      rep.max_offdiag = std::max(rep.max_offdiag, a);
    }
  }
  std::map<int, double> envelope;
  for (auto& [d, g] : groups) {
    g.mean_abs /= static_cast<double>(g.count);
    rep.groups.push_back(g);
    if (g.max_abs >= kEnvelopeFloor) {
      envelope[g.envelope_index] = std::max(envelope[g.envelope_index], g.max_abs);
    }
  }
  std::vector<double> ex, ey;
  for (const auto& [k, v] : envelope) {
    ex.push_back(k);
    ey.push_back(v);
  }
  rep.envelope = semilog_slope(ex, ey);
  rep.envelope_base = rep.envelope.valid ? std::exp(rep.envelope.slope) : 0.0;

  const double d = cfg.box.delta;
  rep.c_upper = d * (26.0 - rep.eigenvalues.back());
  rep.c_lower = std::max(0.0, d * (-rep.eigenvalues.front() - 26.0));
  return rep;
}

DiagReport diag_scaling_experiment(const Tree& tree, const HessianConfig& cfg,
                                   std::span<const double> deltas) {
  const int n = tree.edge_count();
  DiagReport rep;
  for (double delta : deltas) {
    HessianConfig c = cfg;
    c.box.delta = delta;
    c.box.validate();
    const auto params = draw_params(tree, c.box, c.theta_hat, c.seed);
    const auto est = expected_hessian(tree, params, c);
    DiagRow row;
    row.delta = delta;
    row.all_negative = true;
    for (int e = 0; e < n; ++e) {
      const std::size_t k = static_cast<std::size_t>(e) * n + e;
      row.neg_diag.push_back(-est.value[k]);
      row.neg_diag_se.push_back(est.se.empty() ? 0.0 : est.se[k]);
      row.all_negative = row.all_negative && est.value[k] < 0.0;
    }
    row.min_neg = *std::min_element(row.neg_diag.begin(), row.neg_diag.end());
    row.max_neg = *std::max_element(row.neg_diag.begin(), row.neg_diag.end());
    rep.rows.push_back(std::move(row));
  }
  rep.min_slope = std::numeric_limits<double>::infinity();
  rep.max_slope = -std::numeric_limits<double>::infinity();
  std::vector<double> ds(deltas.begin(), deltas.end());
  for (int e = 0; e < n; ++e) {
    std::vector<double> y;
    for (const auto& row : rep.rows) y.push_back(row.neg_diag[e]);
    auto fit = loglog_slope(ds, y);
    rep.edge_slope.push_back(fit);
    if (!fit.valid) continue;
    rep.min_slope = std::min(rep.min_slope, fit.slope);
    rep.max_slope = std::max(rep.max_slope, fit.slope);
  }
  return rep;
}

// ---- Steel's quartet -------------------------------------------------------

SteelFixture steel_fixture() {
  SteelFixture fx;
  // a = 0, b = 1, c = 2, d = 3, internal u = 4 (joins a, b) and v = 5.
  fx.tree = Tree(6, {{0, 4}, {1, 4}, {2, 5}, {3, 5}, {4, 5}}, {"a", "b", "c", "d", "u", "v"});
  fx.batch.leaf_count = 4;
  fx.batch.seed = 0;
  fx.batch.samples = {{1, -1, 1, -1}, {-1, 1, -1, 1}};
  fx.theta1 = {0, 1, 0, 1, 1};
  fx.theta2 = {1, 0, 1, 0, 1};
  return fx;
}

namespace {

double batch_loglik(const Tree& tree, std::span<const double> theta, const SampleBatch& batch) {
  double total = 0.0;
  for (const auto& s : batch.samples) total += leaf_config_log_probability(tree, theta, s);
  return total / static_cast<double>(batch.size());
}

// Maximizes the coordinate slice on [0, 1]. Each sample probability is affine
// in one coordinate, so the slice is concave and golden-section search applies.
void polish_coordinate(const Tree& tree, std::vector<double>& theta, int e,
                       const SampleBatch& batch) {
  auto f = [&](double t) {
    theta[e] = t;
    return batch_loglik(tree, theta, batch);
  };
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = 1.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-12) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  double best_t = 0.5 * (a + b), best = f(best_t);
  for (double t : {0.0, 1.0}) {
    const double v = f(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  theta[e] = best_t;
}

}  // namespace

SteelReport steel_example(double grid_step, int polish_starts) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) throw ValidationError("grid step must lie in (0, 0.5]");
  const auto fx = steel_fixture();
  const int dims = fx.tree.edge_count();
  SteelReport rep;
  rep.grid_step = grid_step;
  rep.loglik1 = batch_loglik(fx.tree, fx.theta1, fx.batch);
  rep.loglik2 = batch_loglik(fx.tree, fx.theta2, fx.batch);

  const int per_axis = static_cast<int>(std::lround(1.0 / grid_step)) + 1;
  std::size_t total = 1;
  for (int k = 0; k < dims; ++k) total *= static_cast<std::size_t>(per_axis);
  auto point = [&](std::size_t idx) {
    std::vector<double> t(dims);
    for (int k = dims - 1; k >= 0; --k) {
      t[k] = std::min(1.0, static_cast<double>(idx % per_axis) * grid_step);
      idx /= per_axis;
    }
    return t;
  };
  std::vector<double> values(total);
  parallel_for(total, [&](std::size_t i) { values[i] = batch_loglik(fx.tree, point(i), fx.batch); });

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  const auto starts = std::min<std::size_t>(static_cast<std::size_t>(polish_starts), total);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(starts), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  rep.grid_max = values[order[0]];
  rep.grid_argmax = point(order[0]);

  std::vector<std::vector<double>> polished(starts);
  std::vector<double> polished_value(starts);
  parallel_for(starts, [&](std::size_t s) {
    auto t = point(order[s]);
    double prev = batch_loglik(fx.tree, t, fx.batch);
    for (int sweep = 0; sweep < 200; ++sweep) {
      for (int e = 0; e < dims; ++e) polish_coordinate(fx.tree, t, e, fx.batch);
      const double now = batch_loglik(fx.tree, t, fx.batch);
      if (now - prev < 1e-15) break;
      prev = now;
    }
    polished[s] = t;
    polished_value[s] = batch_loglik(fx.tree, t, fx.batch);
  });
  rep.polished_max = std::max(rep.grid_max,
                              *std::max_element(polished_value.begin(), polished_value.end()));

  for (std::size_t s = 0; s < starts; ++s) {
    if (polished_value[s] < rep.polished_max - 1e-9) continue;
    bool seen = false;
    for (const auto& m : rep.maximizers) {
      double dist = 0.0;
      for (int k = 0; k < dims; ++k) dist = std::max(dist, std::fabs(m[k] - polished[s][k]));
      seen = seen || dist < 1e-4;
    }
    if (!seen) rep.maximizers.push_back(polished[s]);
  }
  rep.maximizers_on_boundary = !rep.maximizers.empty();
  for (const auto& m : rep.maximizers) {
    const bool boundary = std::any_of(m.begin(), m.end(),
                                      [](double t) { return t <= 1e-9 || t >= 1.0 - 1e-9; });
    rep.maximizers_on_boundary = rep.maximizers_on_boundary && boundary;
  }
  return rep;
}

}  // namespace cfn
