#include "cfn/model.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "cfn/error.hpp"
#include "cfn/rng.hpp"

namespace cfn {

const char* role_name(Role role) { return role == Role::kTruth ? "truth" : "estimate"; }

double convert_edge_parameter(double value, ParamKind kind) {
  if (!std::isfinite(value)) throw ValidationError("edge parameter is not finite");
  switch (kind) {
    case ParamKind::kTheta:
      if (value < -1.0 || value > 1.0) {
        throw ValidationError("theta " + std::to_string(value) + " outside [-1, 1]");
      }
      return value;
    case ParamKind::kP:
      if (value < 0.0 || value > 1.0) {
        throw ValidationError("p " + std::to_string(value) + " outside [0, 1]");
      }
      return 1.0 - 2.0 * value;
    case ParamKind::kLength:
      if (value < 0.0) throw ValidationError("branch length " + std::to_string(value) + " < 0");
      return std::exp(-2.0 * value);
  }
  throw ValidationError("unknown parameter kind");
}

double theta_to_p(double theta) { return 0.5 * (1.0 - theta); }

void RegimeBox::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  if (!(estimate_hi > truth_hi && truth_hi > truth_lo && truth_lo > estimate_lo &&
        estimate_lo > 0.0)) {
    throw ValidationError("box constants must satisfy C-hat > C_p > c_p > c-hat > 0");
  }
  if (estimate_hi < 2.0 * estimate_lo) throw ValidationError("box requires C-hat >= 2 c-hat");
  if (estimate_hi * delta >= 0.5) {
    throw ValidationError("estimate box reaches p >= 1/2; lower delta or C-hat");
  }
}

std::pair<double, double> RegimeBox::p_interval(Role role) const {
  return role == Role::kTruth ? std::pair{truth_lo * delta, truth_hi * delta}
                              : std::pair{estimate_lo * delta, estimate_hi * delta};
}

std::pair<double, double> RegimeBox::theta_interval(Role role) const {
  auto [lo, hi] = p_interval(role);
  return {1.0 - 2.0 * hi, 1.0 - 2.0 * lo};
}

EdgeParams sample_edge_params(const Tree& tree, const RegimeBox& box, Role role,
                              std::uint64_t seed) {
  box.validate();
  auto [lo, hi] = box.p_interval(role);
  CounterRng rng(seed, role == Role::kTruth ? Stream::kTruthParams : Stream::kEstimateParams);
  EdgeParams out;
  out.role = role;
  out.theta.resize(tree.edge_count());
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    out.theta[e] = 1.0 - 2.0 * rng.uniform(lo, hi, static_cast<std::uint64_t>(e));
  }
  return out;
}

BoxCheck check_box_membership(std::span<const double> theta, const RegimeBox& box, Role role) {
  auto [lo, hi] = box.theta_interval(role);
  // Sampled endpoints pass through 1 - 2p, which can land an ulp outside.
  const double slack = 1e-12;
  BoxCheck out;
  for (std::size_t e = 0; e < theta.size(); ++e) {
    if (!(theta[e] >= lo - slack && theta[e] <= hi + slack)) {
      out.violations.push_back(static_cast<EdgeId>(e));
    }
  }
  out.inside = out.violations.empty();
  return out;
}

SpinConfig sample_spins(const Tree& tree, std::span<const double> theta, std::uint64_t seed,
                        std::uint64_t index, std::optional<Spin> root_spin) {
  CounterRng rng(seed, Stream::kSpins);
  const auto ro = rooted_order(tree, 0);
  SpinConfig spins(tree.vertex_count(), 1);
  const auto root_sub = static_cast<std::uint64_t>(tree.edge_count());
  spins[0] = root_spin ? *root_spin : (rng.uniform(index, root_sub) < 0.5 ? 1 : -1);
  for (std::size_t i = 1; i < ro.order.size(); ++i) {
    VertexId v = ro.order[i];
    EdgeId e = ro.parent_edge[v];
    bool flip = rng.uniform(index, static_cast<std::uint64_t>(e)) < theta_to_p(theta[e]);
    spins[v] = static_cast<Spin>(flip ? -spins[ro.parent[v]] : spins[ro.parent[v]]);
  }
  return spins;
}

LeafConfig restrict_to_leaves(const Tree& tree, const SpinConfig& spins) {
  LeafConfig cfg;
  cfg.reserve(tree.leaf_count());
  for (VertexId v : tree.leaves()) cfg.push_back(spins[v]);
  return cfg;
}

SampleBatch sample_batch(const Tree& tree, std::span<const double> theta, std::size_t m,
                         std::uint64_t seed) {
  SampleBatch batch;
  batch.leaf_count = tree.leaf_count();
  batch.seed = seed;
  batch.samples.resize(m);
  const auto count = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    batch.samples[i] = restrict_to_leaves(tree, sample_spins(tree, theta, seed, i));
  }
  return batch;
}

PruningTables prune(const Tree& tree, std::span<const double> theta, const LeafConfig& cfg,
                    VertexId root) {
  if (static_cast<int>(cfg.size()) != tree.leaf_count()) {
    throw ValidationError("leaf configuration has " + std::to_string(cfg.size()) +
                          " entries, tree has " + std::to_string(tree.leaf_count()) +
                          " leaves");
  }
  if (root < 0) root = tree.default_root();
  const auto ro = rooted_order(tree, root);
  PruningTables pt;
  pt.root = root;
  pt.table.assign(tree.vertex_count(), {1.0, 1.0});
  pt.log_scale.assign(tree.vertex_count(), 0.0);

  for (VertexId v : tree.leaves()) {
    pt.table[v] = cfg[tree.leaf_index(v)] > 0 ? std::array{1.0, 0.0} : std::array{0.0, 1.0};
  }
  for (auto it = ro.order.rbegin(); it != ro.order.rend(); ++it) {
    VertexId v = *it;
    auto& tv = pt.table[v];
    const double sum = tv[0] + tv[1];
    if (sum <= 0.0) {
      pt.log_scale[v] = -std::numeric_limits<double>::infinity();
    } else {
      tv[0] /= sum;
      tv[1] /= sum;
      pt.log_scale[v] += std::log(sum);
    }
    VertexId parent = ro.parent[v];
    if (parent < 0) break;
    const double stay = 0.5 * (1.0 + theta[ro.parent_edge[v]]);
    const double flip = 0.5 * (1.0 - theta[ro.parent_edge[v]]);
    auto& tp = pt.table[parent];
    tp[0] *= stay * tv[0] + flip * tv[1];
    tp[1] *= flip * tv[0] + stay * tv[1];
    pt.log_scale[parent] += pt.log_scale[v];
  }
  // Uniform root: P = (L+ + L-) / 2.
  pt.log_probability = pt.log_scale[root] + std::log(0.5);
  return pt;
}

double leaf_config_log_probability(const Tree& tree, std::span<const double> theta,
                                   const LeafConfig& cfg, VertexId root) {
  return prune(tree, theta, cfg, root).log_probability;
}

double leaf_config_probability(const Tree& tree, std::span<const double> theta,
                               const LeafConfig& cfg, VertexId root) {
  return std::exp(leaf_config_log_probability(tree, theta, cfg, root));
}

// ---- sample batch I/O ------------------------------------------------------

namespace {

Spin parse_spin(const std::string& tok) {
  if (tok == "1" || tok == "+1" || tok == "+") return 1;
  if (tok == "-1" || tok == "-") return -1;
  throw ParseError("spin '" + tok + "' is not +1 or -1");
}

LeafConfig parse_row(const std::string& line, char sep) {
  LeafConfig row;
  std::string body = line;
  for (char& c : body) {
    if (c == sep) c = ' ';
  }
  std::istringstream in(body);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.size() == 1 && tokens[0].find_first_not_of("+-") == std::string::npos &&
      tokens[0].size() > 1) {
    for (char c : tokens[0]) row.push_back(c == '+' ? 1 : -1);
    return row;
  }
  for (const auto& tok : tokens) row.push_back(parse_spin(tok));
  return row;
}

}  // namespace

void write_sample_batch(std::ostream& out, const SampleBatch& batch) {
  out << batch.size() << ' ' << batch.leaf_count << ' ' << batch.seed << '\n';
  for (const auto& row : batch.samples) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? " " : "") << static_cast<int>(row[i]);
    }
    out << '\n';
  }
}

void write_sample_batch_csv(std::ostream& out, const Tree& tree, const SampleBatch& batch) {
  const auto& leaves = tree.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) out << (i ? "," : "") << tree.label(leaves[i]);
  out << '\n';
  for (const auto& row : batch.samples) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << static_cast<int>(row[i]);
    }
    out << '\n';
  }
}

SampleBatch read_sample_batch(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  SampleBatch batch;
  std::size_t m = 0;
  bool header = false;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header) {
      std::istringstream h(line);
      if (!(h >> m >> batch.leaf_count >> batch.seed)) {
        throw ParseError("sample file header must be 'm n seed'");
      }
      header = true;
      continue;
    }
    auto row = parse_row(line, ' ');
    if (static_cast<int>(row.size()) != batch.leaf_count) {
      throw ParseError("sample row has " + std::to_string(row.size()) + " spins, expected " +
                       std::to_string(batch.leaf_count));
    }
    batch.samples.push_back(std::move(row));
  }
  if (!header) throw ParseError("sample file is empty");
  if (batch.samples.size() != m) {
    throw ParseError("sample file declares " + std::to_string(m) + " rows, found " +
                     std::to_string(batch.samples.size()));
  }
  return batch;
}

SampleBatch read_sample_batch_csv(const std::string& text, int leaf_count) {
  std::istringstream in(text);
  std::string line;
  SampleBatch batch;
  batch.leaf_count = leaf_count;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (first) {
      first = false;
      // Header row of labels is optional.
      if (line.find_first_not_of("+-1, \t\r") != std::string::npos) continue;
    }
    auto row = parse_row(line, ',');
    if (static_cast<int>(row.size()) != leaf_count) {
      throw ParseError("csv row has " + std::to_string(row.size()) + " spins, expected " +
                       std::to_string(leaf_count));
    }
    batch.samples.push_back(std::move(row));
  }
  return batch;
}

}  // namespace cfn
