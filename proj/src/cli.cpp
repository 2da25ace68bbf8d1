#include "cfn/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cfn/claims.hpp"
#include "cfn/error.hpp"
#include "cfn/kernels.hpp"
#include "cfn/landscape.hpp"
#include "cfn/likelihood.hpp"
#include "cfn/optimize.hpp"

namespace cfn {

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["tree"] = c.tree;
  j["format"] = c.format;
  j["box"] = {{"delta", c.box.delta},
              {"truth_lo", c.box.truth_lo},
              {"truth_hi", c.box.truth_hi},
              {"estimate_lo", c.box.estimate_lo},
              {"estimate_hi", c.box.estimate_hi}};
  j["deltas"] = c.deltas;
  j["m"] = c.m ? Json(*c.m) : Json(nullptr);
  j["seed"] = c.seed;
  j["mode"] = c.mode;
  j["out"] = c.out;
  j["threads"] = c.threads;
  j["check"] = c.check;
  j["check_fd"] = c.check_fd;
  j["grid_step"] = c.grid_step;
  j["k_good"] = c.k_good;
  j["c_severe"] = c.c_severe;
  j["good_multiplier"] = c.good_multiplier;
  j["tol"] = c.tol;
  j["sweeps"] = c.sweeps ? Json(*c.sweeps) : Json(nullptr);
  j["theta_hat"] = c.theta_hat;
  j["method"] = c.method;
  j["step"] = c.step ? Json(*c.step) : Json(nullptr);
  j["widen"] = c.widen;
  j["samples"] = c.samples;
  j["node"] = c.node;
  j["parent"] = c.parent;
  j["pair"] = c.pair;
  j["band_k"] = c.band_k ? Json(*c.band_k) : Json(nullptr);
  j["dominance_samples"] = c.dominance_samples;
  j["dominance_tree"] = c.dominance_tree;
  j["sup"] = c.sup;
  j["sup_grid"] = c.sup_grid;
  j["trials"] = c.trials;
  return j;
}

LoadedTree resolve_tree(const std::string& source, TreeFormat format) {
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 0) throw ValidationError("bad number '" + s + "' in tree source");
    return v;
  };
  auto generated = [](Tree t) {
    LoadedTree lt;
    lt.values.resize(t.edge_count());
    lt.tree = std::move(t);
    return lt;
  };
  if (source.empty()) throw ValidationError("--tree is required for this command");
  if (source == "quartet") return generated(make_caterpillar(4));
  const auto colon = source.find(':');
  if (colon != std::string::npos && !std::filesystem::exists(source)) {
    const std::string kind = source.substr(0, colon);
    std::string rest = source.substr(colon + 1);
    if (kind == "caterpillar") return generated(make_caterpillar(static_cast<int>(number(rest))));
    if (kind == "complete") return generated(make_complete_subtree(static_cast<int>(number(rest))).tree);
    if (kind == "random") {
      std::uint64_t seed = 1;
      const auto c2 = rest.find(':');
      if (c2 != std::string::npos) {
        seed = static_cast<std::uint64_t>(number(rest.substr(c2 + 1)));
        rest = rest.substr(0, c2);
      }
      return generated(make_random_tree(static_cast<int>(number(rest)), seed));
    }
    if (kind == "spine") {
      const auto c2 = rest.find(':');
      if (c2 == std::string::npos) throw ValidationError("spine trees are spine:L:D");
      return generated(make_spine_tree(static_cast<int>(number(rest.substr(0, c2))),
                                       static_cast<int>(number(rest.substr(c2 + 1)))));
    }
    throw ValidationError("unknown generated tree '" + kind +
                          "' (expected caterpillar:N, complete:D, random:N[:SEED], spine:L:D or quartet)");
  }
  return load_tree_file(source, format);
}

namespace {

// ---- plumbing ----------------------------------------------------------------

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string measured;
  std::string required;
};

class CheckList {
 public:
  void add(std::string name, bool pass, std::string measured, std::string required) {
    lines_.push_back({std::move(name), pass, std::move(measured), std::move(required)});
  }
  bool all() const {
    return std::all_of(lines_.begin(), lines_.end(), [](const CheckLine& l) { return l.pass; });
  }
  bool empty() const { return lines_.empty(); }
  Json json() const {
    Json a = Json::array();
    for (const auto& l : lines_) {
      a.push_back({{"name", l.name}, {"pass", l.pass}, {"measured", l.measured},
                   {"required", l.required}});
    }
    return a;
  }
  void print(std::ostream& os) const {
    for (const auto& l : lines_) {
      os << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.measured << " (required "
         << l.required << ")\n";
    }
  }

 private:
  std::vector<CheckLine> lines_;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

struct Context {
  RunConfig cfg;
  Stopwatch clock;
  std::filesystem::path out;
  std::vector<std::string> argv;
};

std::vector<double> deltas_or(const RunConfig& cfg, std::vector<double> fallback) {
  return cfg.deltas.empty() ? fallback : cfg.deltas;
}

std::size_t m_or(const RunConfig& cfg, std::size_t fallback) { return cfg.m ? *cfg.m : fallback; }

RegimeBox box_at(const RunConfig& cfg, double delta) {
  RegimeBox b = cfg.box;
  b.delta = delta;
  b.validate();
  return b;
}

TreeFormat tree_format(const RunConfig& cfg) { return parse_tree_format(cfg.format); }

// Edge values from the tree file when every edge has one.
std::optional<std::vector<double>> file_theta(const LoadedTree& lt) {
  if (lt.values.empty()) return std::nullopt;
  std::vector<double> theta;
  for (const auto& v : lt.values) {
    if (!v) return std::nullopt;
    theta.push_back(convert_edge_parameter(v->value, v->kind));
  }
  return theta;
}

std::vector<double> truth_theta(const LoadedTree& lt, const RegimeBox& box, std::uint64_t seed) {
  if (auto t = file_theta(lt)) return *t;
  return sample_edge_params(lt.tree, box, Role::kTruth, seed).theta;
}

std::vector<double> estimate_theta(const RunConfig& cfg, const LoadedTree& lt,
                                   const std::vector<double>& truth, const RegimeBox& box) {
  if (parse_theta_hat_mode(cfg.theta_hat) == ThetaHatMode::kTruth) return truth;
  return sample_edge_params(lt.tree, box, Role::kEstimate, cfg.seed).theta;
}

SampleBatch load_or_simulate(const RunConfig& cfg, const Tree& tree,
                             const std::vector<double>& truth) {
  if (cfg.samples.empty()) return sample_batch(tree, truth, m_or(cfg, 10000), cfg.seed);
  std::ifstream f(cfg.samples, std::ios::binary);
  if (!f) throw ValidationError("cannot read sample file " + cfg.samples);
  std::stringstream ss;
  ss << f.rdbuf();
  if (std::filesystem::path(cfg.samples).extension() == ".csv") {
    return read_sample_batch_csv(ss.str(), tree.leaf_count());
  }
  auto batch = read_sample_batch(ss.str());
  if (batch.leaf_count != tree.leaf_count()) {
    throw ValidationError("sample file has " + std::to_string(batch.leaf_count) +
                          " leaves, tree has " + std::to_string(tree.leaf_count()));
  }
  return batch;
}

SupSearch sup_search(const RunConfig& cfg) {
  SupSearch s;
  if (cfg.sup == "closed-form") {
    s.method = SupMethod::kClosedForm;
  } else if (cfg.sup == "grid") {
    s.method = SupMethod::kGrid;
  } else {
    throw ValidationError("unknown --sup '" + cfg.sup + "' (expected closed-form or grid)");
  }
  s.grid_points = cfg.sup_grid;
  return s;
}

std::string edge_name(const Tree& tree, EdgeId e) {
  const auto& ed = tree.edge(e);
  return tree.label(ed.a) + "-" + tree.label(ed.b);
}

int finish(Context& ctx, const std::string& stem, const std::vector<std::pair<std::string, std::string>>& csvs,
           Json results, const CheckList& checks) {
  for (const auto& [name, text] : csvs) write_text_file(ctx.out / name, text);
  Json config = config_json(ctx.cfg);
  config["argv"] = ctx.argv;
  if (!checks.empty()) results["checks"] = checks.json();
  const auto report = make_report(config, ctx.cfg.seed, ctx.clock, std::move(results));
  write_text_file(ctx.out / (stem + ".json"), report.dump(2) + "\n");
  checks.print(std::cout);
  std::cout << "wrote " << (ctx.out / (stem + ".json")).string() << "\n";
  if (!checks.empty() && !checks.all()) return kExitCheck;
  return kExitOk;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.size(); ++i) {
    std::vector<double> r;
    for (int j = 0; j < m.size(); ++j) r.push_back(m(i, j));
    rows.push_back(json_array(r));
  }
  return rows;
}

Json slope_json(const SlopeFit& f) {
  return {{"slope", json_number(f.slope)}, {"intercept", json_number(f.intercept)},
          {"valid", f.valid}};
}

// ---- subcommands ---------------------------------------------------------------

int cmd_sample(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree, tree_format(cfg));
  const auto box = box_at(cfg, deltas_or(cfg, {cfg.box.delta}).front());
  const auto theta = truth_theta(lt, box, cfg.seed);
  const auto batch = sample_batch(lt.tree, theta, m_or(cfg, 1000), cfg.seed);
  std::ostringstream csv;
  write_sample_batch_csv(csv, lt.tree, batch);
  Json res{{"leaf_count", lt.tree.leaf_count()}, {"m", batch.size()}, {"theta", json_array(theta)}};
  std::cout << "sampled " << batch.size() << " configurations\n";
  return finish(ctx, "samples", {{"samples.csv", csv.str()}}, std::move(res), {});
}

int cmd_loglik(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree, tree_format(cfg));
  const auto box = box_at(cfg, deltas_or(cfg, {cfg.box.delta}).front());
  const auto truth = truth_theta(lt, box, cfg.seed);
  const auto theta_hat = estimate_theta(cfg, lt, truth, box);
  const auto batch = load_or_simulate(cfg, lt.tree, truth);
  const auto patterns = batch_patterns(batch);
  const double ll = evaluate(lt.tree, theta_hat, patterns, Quantity::kLogLik).loglik();
  const auto g = evaluate(lt.tree, theta_hat, patterns, Quantity::kGradient).value;
  CsvTable t({"edge", "name", "theta_hat", "gradient"});
  for (EdgeId e = 0; e < lt.tree.edge_count(); ++e) {
    t.row({cell(e), edge_name(lt.tree, e), cell(theta_hat[e]), cell(g[e])});
  }
  std::cout << "mean log-likelihood " << format_double(ll) << " over " << batch.size()
            << " samples\n";
  Json res{{"loglik", ll}, {"m", batch.size()}, {"theta_hat", json_array(theta_hat)},
           {"gradient", json_array(g)}};
  return finish(ctx, "loglik", {{"loglik.csv", t.str()}}, std::move(res), {});
}

int cmd_fit(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree, tree_format(cfg));
  const double delta = deltas_or(cfg, {cfg.box.delta}).front();
  const auto box = box_at(cfg, delta);
  const auto truth = truth_theta(lt, box, cfg.seed);
  const auto mode = parse_eval_mode(cfg.mode);
  const Objective obj = mode == EvalMode::kExact
                            ? exact_objective(lt.tree, truth)
                            : batch_objective(load_or_simulate(cfg, lt.tree, truth));
  const auto start = sample_edge_params(lt.tree, box, Role::kEstimate, cfg.seed + 1).theta;

  FitResult fit;
  if (cfg.method == "cd") {
    AscentOptions o;
    o.max_sweeps = cfg.sweeps.value_or(200);
    o.tol = cfg.tol;
    if (cfg.widen) o.interval = widened_interval();
    o.theta_star = truth;
    fit = coordinate_ascent(lt.tree, start, obj, o);
  } else if (cfg.method == "pga") {
    GradientOptions o;
    o.step = cfg.step ? *cfg.step : delta / 2.0;
    auto [lo, hi] = box.theta_interval(Role::kEstimate);
    o.lo = lo;
    o.hi = hi;
    o.max_iters = cfg.sweeps.value_or(5000);
    o.tol = cfg.tol;
    o.theta_star = truth;
    fit = projected_gradient_ascent(lt.tree, start, obj, o);
  } else {
    throw ValidationError("unknown --method '" + cfg.method + "' (expected cd or pga)");
  }

  std::vector<std::string> header{"iteration", "objective", "linf_error"};
  CsvTable t(header);
  for (std::size_t k = 0; k < fit.objective.size(); ++k) {
    t.row({cell(k), cell(fit.objective[k]), cell(fit.linf_error.at(k))});
  }
  CsvTable est({"edge", "name", "theta_star", "theta_start", "theta_fit"});
  for (EdgeId e = 0; e < lt.tree.edge_count(); ++e) {
    est.row({cell(e), edge_name(lt.tree, e), cell(truth[e]), cell(start[e]), cell(fit.theta[e])});
  }
  bool monotone = true;
  for (std::size_t k = 1; k < fit.objective.size(); ++k) {
    monotone = monotone && fit.objective[k] >= fit.objective[k - 1] - 1e-12;
  }
  CheckList checks;
  if (cfg.check) {
    if (cfg.method == "cd") {
      checks.add("objective nondecreasing", monotone, monotone ? "yes" : "no", "yes");
    }
    if (mode == EvalMode::kExact) {
      const double err = fit.linf_error.back();
      checks.add("converged to theta*", err < 1e-8, fmt(err), "< 1e-08");
    }
  }
  Json res{{"method", cfg.method},
           {"objective_kind", obj.kind},
           {"iterations", fit.iterations},
           {"stop", stop_reason_name(fit.stop)},
           {"theta_star", json_array(truth)},
           {"theta_start", json_array(start)},
           {"theta", json_array(fit.theta)},
           {"objective", json_array(fit.objective)},
           {"linf_error", json_array(fit.linf_error)}};
  std::cout << cfg.method << ": " << fit.iterations << " iterations, stop "
            << stop_reason_name(fit.stop) << ", final L-inf error "
            << format_double(fit.linf_error.back()) << "\n";
  return finish(ctx, "fit", {{"fit.csv", t.str()}, {"fit_theta.csv", est.str()}}, std::move(res),
                checks);
}

Json hessian_json(const HessianReport& r) {
  Json groups = Json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"distance", g.distance}, {"envelope_index", g.envelope_index},
                      {"count", g.count}, {"max_abs", g.max_abs}, {"mean_abs", g.mean_abs}});
  }
  return {{"delta", r.delta},
          {"mode", eval_mode_name(r.mode)},
          {"theta_star", json_array(r.theta_star)},
          {"theta_hat", json_array(r.theta_hat)},
          {"hessian", matrix_json(r.h)},
          {"se", matrix_json(r.se)},
          {"eigenvalues", json_array(r.eigenvalues)},
          {"gershgorin",
           {{"center", json_array(r.gershgorin.center)},
            {"radius", json_array(r.gershgorin.radius)},
            {"lower", r.gershgorin.lower},
            {"upper", r.gershgorin.upper}}},
          {"diagonally_dominant", r.diagonally_dominant},
          {"eigenvalues_in_disks", r.eigen_in_disks},
          {"max_offdiag", r.max_offdiag},
          {"min_abs_diag", r.min_abs_diag},
          {"groups", groups},
          {"envelope", slope_json(r.envelope)},
          {"envelope_base", r.envelope_base},
          {"lambda_bounds", {{"C", r.c_upper}, {"C_tilde", r.c_lower}}}};
}

void hessian_rows(CsvTable& t, const Tree& tree, const HessianReport& r) {
  for (int e = 0; e < tree.edge_count(); ++e) {
    for (int f = e; f < tree.edge_count(); ++f) {
      t.row({cell(r.delta), cell(e), cell(f), cell(e == f ? -1 : edge_distance(tree, e, f)),
             cell(r.h(e, f)), cell(r.se(e, f))});
    }
  }
}

void concavity_checks(CheckList& checks, const HessianReport& r, const std::string& tag) {
  checks.add(tag + "diagonal dominance", r.diagonally_dominant,
             r.diagonally_dominant ? "every row" : "violated", "every row");
  checks.add(tag + "max eigenvalue", r.eigenvalues.back() < 0.0, fmt(r.eigenvalues.back()), "< 0");
  checks.add(tag + "eigenvalues in Gershgorin disks", r.eigen_in_disks,
             r.eigen_in_disks ? "all" : "violated", "all");
}

int cmd_hessian(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree, tree_format(cfg));
  HessianConfig hc;
  hc.box = box_at(cfg, deltas_or(cfg, {cfg.box.delta}).front());
  hc.mode = parse_eval_mode(cfg.mode);
  hc.m = m_or(cfg, 100000);
  hc.seed = cfg.seed;
  hc.theta_hat = parse_theta_hat_mode(cfg.theta_hat);
  if (file_theta(lt)) throw ValidationError("hessian draws theta from the regime box; remove edge values");
  const auto rep = hessian_report(lt.tree, hc);
  CsvTable t({"delta", "e", "f", "distance", "value", "se"});
  hessian_rows(t, lt.tree, rep);
  Json res = hessian_json(rep);
  CheckList checks;
  if (cfg.check) concavity_checks(checks, rep, "");
  if (cfg.check_fd) {
    const auto patterns =
        hc.mode == EvalMode::kExact
            ? population_patterns(lt.tree, rep.theta_star)
            : batch_patterns(sample_batch(lt.tree, rep.theta_star, hc.m, hc.seed));
    const auto grad = evaluate(lt.tree, rep.theta_hat, patterns, Quantity::kGradient).value;
    const auto hess = evaluate(lt.tree, rep.theta_hat, patterns, Quantity::kHessian).value;
    const auto fd = fd_oracle(lt.tree, rep.theta_hat, patterns);
    const auto ml = multilinear_oracle(lt.tree, rep.theta_hat, patterns);
    const auto g_err = compare_relative(grad, fd.gradient);
    const auto h_err = compare_relative(hess, ml.hessian.data());
    const auto h_fd = compare_relative(hess, fd.hessian.data());
    res["fd"] = {{"gradient_max_relative", g_err.max_relative},
                 {"gradient_max_absolute", g_err.max_absolute},
                 {"hessian_max_relative", h_err.max_relative},
                 {"hessian_oracle", "multilinear"},
                 {"hessian_plain_fd_max_relative", h_fd.max_relative},
                 {"hessian_plain_fd_max_absolute", h_fd.max_absolute}};
    // At theta-hat = theta* the gradient vanishes and the relative error only
    // compares truncation noise, so the tolerance is mixed.
    double g_mixed = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      g_mixed = std::max(g_mixed, std::abs(grad[k] - fd.gradient[k]) /
                                      std::max(1.0, std::abs(fd.gradient[k])));
    }
    res["fd"]["gradient_max_mixed"] = g_mixed;
    checks.add("gradient vs central differences", g_mixed < 1e-6, fmt(g_mixed),
               "< 1e-06 * max(1, |fd|)");
    checks.add("hessian vs multilinear differences", h_err.max_relative < 1e-5,
               fmt(h_err.max_relative), "< 1e-05 relative on entries > 1e-08");
  }
  std::cout << "lambda in [" << format_double(rep.eigenvalues.front()) << ", "
            << format_double(rep.eigenvalues.back()) << "]\n";
  return finish(ctx, "hessian", {{"hessian.csv", t.str()}}, std::move(res), checks);
}

int cmd_landscape_diag(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree.empty() ? "quartet" : cfg.tree, tree_format(cfg));
  HessianConfig hc;
  hc.box = cfg.box;
  hc.mode = parse_eval_mode(cfg.mode);
  hc.m = m_or(cfg, 100000);
  hc.seed = cfg.seed;
  hc.theta_hat = parse_theta_hat_mode(cfg.theta_hat);
  const auto deltas = deltas_or(cfg, {0.02, 0.01, 0.005});
  for (double d : deltas) box_at(cfg, d);
  const auto rep = diag_scaling_experiment(lt.tree, hc, deltas);
  CsvTable t({"delta", "edge", "neg_diag", "se"});
  Json rows = Json::array();
  bool all_negative = true;
  for (const auto& r : rep.rows) {
    for (std::size_t e = 0; e < r.neg_diag.size(); ++e) {
      t.row({cell(r.delta), cell(e), cell(r.neg_diag[e]), cell(r.neg_diag_se[e])});
    }
    rows.push_back({{"delta", r.delta}, {"min_neg_diag", r.min_neg}, {"max_neg_diag", r.max_neg},
                    {"all_negative", r.all_negative}});
    all_negative = all_negative && r.all_negative;
  }
  Json slopes = Json::array();
  for (const auto& s : rep.edge_slope) slopes.push_back(slope_json(s));
  Json res{{"rows", rows}, {"edge_slopes", slopes}, {"min_slope", json_number(rep.min_slope)},
           {"max_slope", json_number(rep.max_slope)}};
  CheckList checks;
  if (cfg.check) {
    checks.add("all diagonal entries negative", all_negative, all_negative ? "yes" : "no", "yes");
    const bool ok = rep.min_slope >= -1.15 && rep.max_slope <= -0.85;
    checks.add("log(-H_ee) slope in delta", ok,
               "[" + fmt(rep.min_slope) + ", " + fmt(rep.max_slope) + "]", "-1 +/- 0.15");
  }
  std::cout << "diagonal slopes in [" << fmt(rep.min_slope) << ", " << fmt(rep.max_slope) << "]\n";
  return finish(ctx, "landscape_diag", {{"landscape_diag.csv", t.str()}}, std::move(res), checks);
}

int cmd_landscape_offdiag(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree.empty() ? "caterpillar:12" : cfg.tree, tree_format(cfg));
  const auto deltas = deltas_or(cfg, {0.01});
  CsvTable t({"delta", "e", "f", "distance", "value", "se"});
  CsvTable g({"delta", "distance", "envelope_index", "count", "max_abs", "mean_abs"});
  Json reports = Json::array();
  CheckList checks;
  std::vector<std::pair<double, double>> bases;
  for (double d : deltas) {
    HessianConfig hc;
    hc.box = box_at(cfg, d);
    hc.mode = parse_eval_mode(cfg.mode);
    hc.m = m_or(cfg, 100000);
    hc.seed = cfg.seed;
    hc.theta_hat = parse_theta_hat_mode(cfg.theta_hat);
    const auto rep = hessian_report(lt.tree, hc);
    hessian_rows(t, lt.tree, rep);
    for (const auto& gr : rep.groups) {
      g.row({cell(d), cell(gr.distance), cell(gr.envelope_index), cell(gr.count),
             cell(gr.max_abs), cell(gr.mean_abs)});
    }
    reports.push_back(hessian_json(rep));
    bases.emplace_back(d, rep.envelope_base);
    if (cfg.check) {
      const std::string tag = "delta=" + fmt(d) + " ";
      concavity_checks(checks, rep, tag);
      checks.add(tag + "max |off-diagonal| vs min |diagonal|",
                 rep.max_offdiag < 0.5 * rep.min_abs_diag,
                 fmt(rep.max_offdiag) + " vs " + fmt(rep.min_abs_diag), "< 0.5 x min |diagonal|");
    }
    std::cout << "delta " << d << ": lambda_max " << format_double(rep.eigenvalues.back())
              << ", envelope base " << format_double(rep.envelope_base) << "\n";
  }
  if (cfg.check && bases.size() >= 2) {
    auto sorted = bases;
    std::sort(sorted.begin(), sorted.end());
    bool decreasing = true;
    for (std::size_t k = 1; k < sorted.size(); ++k) {
      decreasing = decreasing && sorted[k - 1].second < sorted[k].second;
    }
    checks.add("envelope base shrinks with delta", decreasing, decreasing ? "yes" : "no", "yes");
  }
  Json res{{"reports", reports}};
  return finish(ctx, "landscape_offdiag",
                {{"landscape_offdiag.csv", t.str()}, {"landscape_offdiag_groups.csv", g.str()}},
                std::move(res), checks);
}

VertexId vertex_arg(const Tree& tree, const std::string& s) {
  if (auto v = tree.find_label(s)) return *v;
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used == s.size() && v >= 0 && v < tree.vertex_count()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError("unknown vertex '" + s + "'");
}

int cmd_recon(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string source = cfg.tree.empty() ? "complete:5" : cfg.tree;
  const auto lt = resolve_tree(source, tree_format(cfg));
  VertexId node = -1, parent = -1;
  if (!cfg.node.empty()) {
    node = vertex_arg(lt.tree, cfg.node);
    if (cfg.parent.empty()) throw ValidationError("--node needs --parent");
    parent = vertex_arg(lt.tree, cfg.parent);
  } else if (source.rfind("complete:", 0) == 0) {
    const auto sub = make_complete_subtree(std::stoi(source.substr(9)));
    node = sub.node;
    parent = sub.parent;
  } else {
    throw ValidationError("recon-tiers needs --node and --parent for this tree");
  }
  ReconstructionConfig rc;
  rc.box = cfg.box;
  rc.deltas = deltas_or(cfg, {0.04, 0.02, 0.01});
  for (double d : rc.deltas) box_at(cfg, d);
  rc.m = m_or(cfg, 100000);
  rc.seed = cfg.seed;
  rc.thresholds = {cfg.k_good, cfg.c_severe, cfg.good_multiplier};
  rc.theta_hat = parse_theta_hat_mode(cfg.theta_hat);
  const auto reps = reconstruction_experiment(lt.tree, node, parent, rc);

  CsvTable t({"delta", "m", "good", "moderate", "severe", "freq_good", "freq_moderate",
              "freq_severe", "child_x_negative", "child_y_negative", "joint_negative"});
  std::vector<double> ds, fail, severe, joint;
  Json rows = Json::array();
  double k_fit = 0.0;
  for (const auto& r : reps) {
    t.row({cell(r.delta), cell(r.m), cell(r.counts[0]), cell(r.counts[1]), cell(r.counts[2]),
           cell(r.frequency[0]), cell(r.frequency[1]), cell(r.frequency[2]),
           cell(r.child_negative[0]), cell(r.child_negative[1]), cell(r.joint_negative)});
    ds.push_back(r.delta);
    fail.push_back(r.frequency[1] + r.frequency[2]);
    severe.push_back(r.frequency[2]);
    joint.push_back(r.joint_negative);
    k_fit = std::max(k_fit, (1.0 - r.frequency[0]) / r.delta);
    rows.push_back({{"delta", r.delta},
                    {"counts", r.counts},
                    {"frequency", r.frequency},
                    {"child_negative", r.child_negative},
                    {"joint_negative", r.joint_negative}});
  }
  const auto fail_slope = loglog_slope(ds, fail);
  const auto severe_slope = loglog_slope(ds, severe);
  const auto joint_slope = loglog_slope(ds, joint);
  Json res{{"node", lt.tree.label(node)},
           {"parent", lt.tree.label(parent)},
           {"rows", rows},
           {"failure_slope", slope_json(fail_slope)},
           {"severe_slope", slope_json(severe_slope)},
           {"joint_negative_slope", slope_json(joint_slope)},
           {"good_frequency_constant", k_fit}};
  CheckList checks;
  if (cfg.check) {
    checks.add("moderate+severe slope", fail_slope.valid && std::fabs(fail_slope.slope - 1.0) <= 0.3,
               fmt(fail_slope.slope), "1 +/- 0.3");
    checks.add("severe slope", severe_slope.valid && std::fabs(severe_slope.slope - 2.0) <= 0.5,
               fmt(severe_slope.slope), "2 +/- 0.5");
  }
  std::cout << "failure slope " << fmt(fail_slope.slope) << ", severe slope "
            << fmt(severe_slope.slope) << "\n";
  return finish(ctx, "recon_tiers", {{"recon_tiers.csv", t.str()}}, std::move(res), checks);
}

std::pair<EdgeId, EdgeId> farthest_pair(const Tree& tree) {
  std::pair<EdgeId, EdgeId> best{0, 1};
  int dist = -1;
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    for (EdgeId f = e + 1; f < tree.edge_count(); ++f) {
      const int d = edge_distance(tree, e, f);
      if (d > dist) {
        dist = d;
        best = {e, f};
      }
    }
  }
  return best;
}

int cmd_wterms(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto lt = resolve_tree(cfg.tree.empty() ? "spine:8:3" : cfg.tree, tree_format(cfg));
  const auto dom_tree = resolve_tree(cfg.dominance_tree, tree_format(cfg));
  auto [e, f] = farthest_pair(lt.tree);
  if (!cfg.pair.empty()) {
    if (cfg.pair.size() != 2) throw ValidationError("--pair takes two edge ids");
    e = cfg.pair[0];
    f = cfg.pair[1];
  }
  WTierConfig wc;
  wc.box = cfg.box;
  wc.deltas = deltas_or(cfg, {0.04, 0.02, 0.01});
  for (double d : wc.deltas) box_at(cfg, d);
  wc.m = m_or(cfg, 100000);
  wc.seed = cfg.seed;
  wc.k = cfg.band_k;
  wc.search = sup_search(cfg);
  wc.theta_hat = parse_theta_hat_mode(cfg.theta_hat);
  const auto rep = w_tier_experiment(lt.tree, e, f, wc);

  DominanceConfig dc;
  dc.box = box_at(cfg, *std::min_element(wc.deltas.begin(), wc.deltas.end()));
  dc.samples = cfg.dominance_samples;
  dc.seed = cfg.seed;
  dc.search = wc.search;
  dc.theta_hat = ThetaHatMode::kBox;
  const auto dom = dominance_experiment(dom_tree.tree, dc);

  CsvTable t({"delta", "count", "band0", "band1", "band2", "band3", "band4", "p_gt_kd2",
              "p_gt_k", "p_gt_k_over_d", "p_gt_k_over_d2", "mean", "max", "median_over_d2"});
  Json rows = Json::array();
  bool mean_ok = true;
  for (const auto& r : rep.rows) {
    t.row({cell(r.delta), cell(r.count), cell(r.band[0]), cell(r.band[1]), cell(r.band[2]),
           cell(r.band[3]), cell(r.band[4]), cell(r.exceed[0]), cell(r.exceed[1]),
           cell(r.exceed[2]), cell(r.exceed[3]), cell(r.mean), cell(r.max),
           cell(r.median_over_d2)});
    rows.push_back({{"delta", r.delta}, {"band", r.band}, {"exceed", r.exceed}, {"mean", r.mean},
                    {"max", r.max}, {"mean_limit", rep.k * rep.k * r.delta}});
    mean_ok = mean_ok && r.mean <= rep.k * rep.k * r.delta;
  }
  Json slopes = Json::array();
  for (const auto& s : rep.exceed_slope) slopes.push_back(slope_json(s));
  Json res{{"e", e},
           {"f", f},
           {"distance", rep.distance},
           {"k", rep.k},
           {"k_fitted", rep.k_fitted},
           {"rows", rows},
           {"exceed_slopes", slopes},
           {"mean_slope", slope_json(rep.mean_slope)},
           {"k_mean", rep.k_mean},
           {"mean_within_k_squared_delta", mean_ok},
           {"dominance",
            {{"tree", cfg.dominance_tree},
             {"delta", dc.box.delta},
             {"samples", dom.samples},
             {"pairs", dom.pairs},
             {"checks", dom.checks},
             {"violations", dom.violations},
             {"worst_ratio", dom.worst_ratio},
             {"w_blocks", dom.w_blocks},
             {"ceiling", w_ceiling(dc.box)},
             {"ceiling_violations", dom.ceiling_violations},
             {"max_w_over_ceiling", dom.max_w_over_ceiling}}}};
  CheckList checks;
  if (cfg.check) {
    const auto& s1 = rep.exceed_slope[1];
    const auto& s2 = rep.exceed_slope[2];
    checks.add("P(W > K) slope", s1.valid && std::fabs(s1.slope - 1.0) <= 0.4, fmt(s1.slope),
               "1 +/- 0.4");
    checks.add("P(W > K/delta) slope", s2.valid && std::fabs(s2.slope - 2.0) <= 0.6,
               fmt(s2.slope), "2 +/- 0.6");
    checks.add("block product dominates |entry|", dom.violations == 0,
               std::to_string(dom.violations) + " of " + std::to_string(dom.checks), "0");
    checks.add("W ceiling", dom.ceiling_violations == 0,
               "max W / ceiling " + fmt(dom.max_w_over_ceiling), "<= 1");
  }
  std::cout << "K " << fmt(rep.k) << ", slopes " << fmt(rep.exceed_slope[1].slope) << " / "
            << fmt(rep.exceed_slope[2].slope) << ", mean W slope " << fmt(rep.mean_slope.slope)
            << " (mean <= K^2 delta: " << (mean_ok ? "yes" : "no") << ", K' = " << fmt(rep.k_mean)
            << "), dominance violations " << dom.violations << "\n";
  return finish(ctx, "wterms", {{"wterms.csv", t.str()}}, std::move(res), checks);
}

int cmd_steel(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto rep = steel_example(cfg.grid_step);
  CsvTable t({"index", "theta_a", "theta_b", "theta_c", "theta_d", "theta_internal"});
  Json maxima = Json::array();
  for (std::size_t k = 0; k < rep.maximizers.size(); ++k) {
    const auto& m = rep.maximizers[k];
    t.row({cell(k), cell(m[0]), cell(m[1]), cell(m[2]), cell(m[3]), cell(m[4])});
    maxima.push_back(json_array(m));
  }
  const auto fx = steel_fixture();
  Json res{{"theta1", json_array(fx.theta1)},
           {"theta2", json_array(fx.theta2)},
           {"loglik_theta1", rep.loglik1},
           {"loglik_theta2", rep.loglik2},
           {"grid_step", rep.grid_step},
           {"grid_max", rep.grid_max},
           {"grid_argmax", json_array(rep.grid_argmax)},
           {"polished_max", rep.polished_max},
           {"maximizers", maxima},
           {"maximizers_on_boundary", rep.maximizers_on_boundary}};
  CheckList checks;
  if (cfg.check) {
    const double gap = std::fabs(rep.loglik1 - rep.loglik2);
    checks.add("l(theta1) = l(theta2)", gap <= 1e-12, fmt(gap), "<= 1e-12");
    const double excess = rep.polished_max - rep.loglik1;
    checks.add("no value above l(theta1)", excess <= 1e-9, fmt(excess), "<= 1e-09");
    checks.add("maximizers on the boundary", rep.maximizers_on_boundary,
               std::to_string(rep.maximizers.size()) + " maximizers", "all on the boundary");
  }
  std::cout << "l(theta1) = " << format_double(rep.loglik1) << ", l(theta2) = "
            << format_double(rep.loglik2) << "\n";
  return finish(ctx, "steel", {{"steel.csv", t.str()}}, std::move(res), checks);
}

int cmd_selftest(Context& ctx) {
  const auto& cfg = ctx.cfg;
  CheckList checks;
  const Tree quartet = make_caterpillar(4);

  {
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      RegimeBox box;
      const auto theta = sample_edge_params(quartet, box, Role::kTruth, s).theta;
      const auto g = expected_exact(quartet, theta, theta, Quantity::kGradient).value;
      for (double x : g) worst = std::max(worst, std::fabs(x));
    }
    checks.add("score identity (quartet, exact)", worst < 1e-12, fmt(worst), "< 1e-12");
  }
  {
    HessianConfig hc;
    const std::vector<double> ds{0.02, 0.01, 0.005};
    const auto rep = diag_scaling_experiment(quartet, hc, ds);
    bool neg = true;
    for (const auto& r : rep.rows) neg = neg && r.all_negative;
    checks.add("diagonal entries negative", neg, neg ? "yes" : "no", "yes");
    checks.add("diagonal slope", rep.min_slope >= -1.15 && rep.max_slope <= -0.85,
               "[" + fmt(rep.min_slope) + ", " + fmt(rep.max_slope) + "]", "-1 +/- 0.15");
  }
  {
    const Tree tree = make_random_tree(6, 7);
    RegimeBox box;
    box.delta = 0.05;
    const auto theta = sample_edge_params(tree, box, Role::kEstimate, 3).theta;
    const auto patterns = batch_patterns(sample_batch(tree, theta, 20, 11));
    const auto g = evaluate(tree, theta, patterns, Quantity::kGradient).value;
    const auto h = evaluate(tree, theta, patterns, Quantity::kHessian).value;
    const auto g_err = compare_relative(g, fd_oracle(tree, theta, patterns).gradient);
    const auto h_err = compare_relative(h, multilinear_oracle(tree, theta, patterns).hessian.data());
    checks.add("gradient vs central differences", g_err.max_relative < 1e-6,
               fmt(g_err.max_relative), "< 1e-06 relative");
    checks.add("hessian vs multilinear differences", h_err.max_relative < 1e-5,
               fmt(h_err.max_relative), "< 1e-05 relative");
  }
  for (const auto& c : run_claim_suite(cfg.trials, cfg.seed)) {
    if (!c.asserted) continue;
    checks.add(c.name, c.passed(),
               std::to_string(c.failures) + " failures in " + std::to_string(c.trials) +
                   ", worst margin " + fmt(c.worst_margin),
               "0 failures");
  }
  {
    RegimeBox box;
    const auto truth = sample_edge_params(quartet, box, Role::kTruth, 5).theta;
    const auto start = sample_edge_params(quartet, box, Role::kEstimate, 6).theta;
    AscentOptions o;
    o.theta_star = truth;
    const auto fit = coordinate_ascent(quartet, start, exact_objective(quartet, truth), o);
    checks.add("coordinate ascent reaches theta*", fit.linf_error.back() < 1e-8,
               fmt(fit.linf_error.back()), "< 1e-08");
  }
  {
    const auto rep = steel_example(cfg.grid_step);
    const double gap = std::fabs(rep.loglik1 - rep.loglik2);
    checks.add("Steel: equal likelihoods", gap <= 1e-12, fmt(gap), "<= 1e-12");
    checks.add("Steel: no higher value", rep.polished_max - rep.loglik1 <= 1e-9,
               fmt(rep.polished_max - rep.loglik1), "<= 1e-09");
    checks.add("Steel: maximizers on boundary", rep.maximizers_on_boundary,
               std::to_string(rep.maximizers.size()) + " maximizers", "all on the boundary");
  }
  {
    double worst = 0.0;
    for (double p : {0.001, 0.01, 0.1, 0.3, 0.49}) {
      const double th = convert_edge_parameter(p, ParamKind::kP);
      worst = std::max(worst, std::fabs(theta_to_p(th) - p));
      const double l = -0.5 * std::log(th);
      worst = std::max(worst, std::fabs(convert_edge_parameter(l, ParamKind::kLength) - th));
    }
    checks.add("parameter conversions round-trip", worst < 1e-14, fmt(worst), "< 1e-14");
  }
  Json res{{"all_pass", checks.all()}};
  const int code = finish(ctx, "selftest", {}, std::move(res), checks);
  std::cout << (checks.all() ? "selftest passed\n" : "selftest FAILED\n");
  return code == kExitOk ? kExitOk : kExitCheck;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  RunConfig cfg;
  std::size_t m_raw = 0;
  double step_raw = 0.0;
  double band_k_raw = 0.0;
  int sweeps_raw = 0;

  CLI::App app{"Likelihood landscape experiments for the CFN binary latent tree model", "cfn"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs{
      {"sample", "simulate leaf configurations"},
      {"loglik", "mean log-likelihood and gradient of a sample batch"},
      {"fit", "coordinate ascent or projected gradient ascent"},
      {"hessian", "expected Hessian, eigenvalues and Gershgorin disks"},
      {"landscape-diag", "diagonal Hessian scaling in delta"},
      {"landscape-offdiag", "off-diagonal decay, dominance and concavity"},
      {"recon-tiers", "reconstruction tier frequencies at a node"},
      {"wterms", "W block tiers and per-sample block dominance"},
      {"steel", "Steel's two-maximum quartet"},
      {"selftest", "fast subset of the acceptance checks"},
  };
  for (const auto& s : subs) {
    auto* sc = app.add_subcommand(s.name, s.help);
    sc->add_option("--tree", cfg.tree,
                   "tree file, or caterpillar:N, complete:D, random:N[:SEED], spine:L:D, quartet");
    sc->add_option("--format", cfg.format, "edge-list or newick")->capture_default_str();
    sc->add_option("--delta", cfg.deltas, "delta value(s), comma separated")->delimiter(',');
    sc->add_option("--m", m_raw, "sample count");
    sc->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sc->add_option("--mode", cfg.mode, "exact or mc")->capture_default_str();
    sc->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sc->add_option("--threads", cfg.threads, "worker cap (0: runtime default)");
    sc->add_flag("--check", cfg.check, "apply acceptance tolerances; exit 3 on failure");
    sc->add_option("--c-lo", cfg.box.truth_lo, "truth box lower multiplier c_p")->capture_default_str();
    sc->add_option("--c-hi", cfg.box.truth_hi, "truth box upper multiplier C_p")->capture_default_str();
    sc->add_option("--chat-lo", cfg.box.estimate_lo, "estimate box lower multiplier")->capture_default_str();
    sc->add_option("--chat-hi", cfg.box.estimate_hi, "estimate box upper multiplier")->capture_default_str();
    sc->add_option("--theta-hat", cfg.theta_hat, "truth or box")->capture_default_str();
    sc->add_option("--grid-step", cfg.grid_step, "Steel grid step")->capture_default_str();
    sc->add_option("--k-good", cfg.k_good, "good-tier constant")->capture_default_str();
    sc->add_option("--c-severe", cfg.c_severe, "severe-tier threshold")->capture_default_str();
    sc->add_option("--good-multiplier", cfg.good_multiplier, "good-tier multiplier")
        ->capture_default_str();
    sc->add_option("--tol", cfg.tol, "optimizer tolerance")->capture_default_str();
    sc->add_option("--sweeps", sweeps_raw, "sweep / iteration cap (default 200 for cd, 5000 for pga)");
    sc->add_option("--method", cfg.method, "cd or pga")->capture_default_str();
    sc->add_option("--step", step_raw, "gradient step (default delta / 2)");
    sc->add_flag("--widen", cfg.widen, "allow negative theta in coordinate updates");
    sc->add_option("--samples", cfg.samples, "sample file (.csv or text)");
    sc->add_option("--node", cfg.node, "node label or id");
    sc->add_option("--parent", cfg.parent, "parent label or id");
    sc->add_option("--pair", cfg.pair, "edge ids e,f")->delimiter(',');
    sc->add_option("--band-k", band_k_raw, "fixed W band constant (fitted when absent)");
    sc->add_option("--dominance-samples", cfg.dominance_samples, "configs for the dominance check")
        ->capture_default_str();
    sc->add_option("--dominance-tree", cfg.dominance_tree, "tree for the dominance check")
        ->capture_default_str();
    sc->add_option("--sup", cfg.sup, "closed-form or grid")->capture_default_str();
    sc->add_option("--sup-grid", cfg.sup_grid, "grid points for --sup grid")->capture_default_str();
    sc->add_option("--trials", cfg.trials, "random inputs per selftest property")->capture_default_str();
    if (std::string(s.name) == "hessian") {
      sc->add_flag("--check-fd", cfg.check_fd, "compare against finite-difference oracles");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  if (m_raw > 0) cfg.m = m_raw;
  if (step_raw > 0.0) cfg.step = step_raw;
  if (band_k_raw > 0.0) cfg.band_k = band_k_raw;
  if (sweeps_raw > 0) cfg.sweeps = sweeps_raw;
  if (!cfg.deltas.empty()) cfg.box.delta = cfg.deltas.front();

  Context ctx{cfg, Stopwatch(), std::filesystem::path(cfg.out), {}};
  for (int k = 0; k < argc; ++k) ctx.argv.emplace_back(argv[k]);
  try {
    cfg.box.validate();
    set_thread_count(cfg.threads);
    const auto& c = cfg.command;
    if (c == "sample") return cmd_sample(ctx);
    if (c == "loglik") return cmd_loglik(ctx);
    if (c == "fit") return cmd_fit(ctx);
    if (c == "hessian") return cmd_hessian(ctx);
    if (c == "landscape-diag") return cmd_landscape_diag(ctx);
    if (c == "landscape-offdiag") return cmd_landscape_offdiag(ctx);
    if (c == "recon-tiers") return cmd_recon(ctx);
    if (c == "wterms") return cmd_wterms(ctx);
    if (c == "steel") return cmd_steel(ctx);
    if (c == "selftest") return cmd_selftest(ctx);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CapError& e) {
    std::cerr << "error: " << e.what() << " (use --mode mc or a smaller tree)\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitConfig;
}

}  // namespace cfn
