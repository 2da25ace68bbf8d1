#include "cfn/magnetization.hpp"

#include <iomanip>
#include <sstream>

#include "cfn/error.hpp"

namespace cfn {

double q_combine(double x, double y, double floor) {
  const double den = 1.0 + x * y;
  if (!(den > floor)) {
    std::ostringstream msg;
    msg << "q(" << x << ", " << y << "): denominator " << den << " at or below floor";
    throw DomainError(msg.str());
  }
  return (x + y) / den;
}

namespace {

void check_config(const Tree& tree, const LeafConfig& cfg) {
  if (static_cast<int>(cfg.size()) != tree.leaf_count()) {
    throw ValidationError("leaf configuration does not match the tree's leaf count");
  }
}

double leaf_spin(const Tree& tree, const LeafConfig& cfg, VertexId v) {
  return static_cast<double>(cfg[tree.leaf_index(v)]);
}

}  // namespace

std::vector<double> upward_magnetizations(const Tree& tree, std::span<const double> theta,
                                          const LeafConfig& cfg, VertexId root) {
  check_config(tree, cfg);
  const auto ro = rooted_order(tree, root);
  std::vector<double> z(tree.vertex_count(), 0.0);
  for (auto it = ro.order.rbegin(); it != ro.order.rend(); ++it) {
    VertexId v = *it;
    if (tree.is_leaf(v)) {
      z[v] = leaf_spin(tree, cfg, v);
      continue;
    }
    double acc = 0.0;
    auto nbrs = tree.neighbors(v);
    auto inc = tree.incident_edges(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == ro.parent[v]) continue;
      acc = q_combine(acc, theta[inc[k]] * z[nbrs[k]]);
    }
    z[v] = acc;
  }
  return z;
}

MagnetizationTable directed_magnetizations(const Tree& tree, std::span<const double> theta,
                                           const LeafConfig& cfg) {
  check_config(tree, cfg);
  const auto ro = rooted_order(tree, tree.default_root());
  MagnetizationTable table(tree.edge_count());

  // Combination at v of every incoming message except the one from `skip`.
  auto combine_except = [&](VertexId v, VertexId skip) {
    if (tree.is_leaf(v)) return leaf_spin(tree, cfg, v);
    double acc = 0.0;
    auto nbrs = tree.neighbors(v);
    auto inc = tree.incident_edges(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == skip) continue;
      acc = q_combine(acc, theta[inc[k]] * table.from(tree, inc[k], nbrs[k]));
    }
    return acc;
  };

  // Upward: Z(v -> parent).
  for (auto it = ro.order.rbegin(); it != ro.order.rend(); ++it) {
    VertexId v = *it;
    if (ro.parent[v] < 0) continue;
    table.set(tree, ro.parent_edge[v], v, combine_except(v, ro.parent[v]));
  }
  // Downward: Z(v -> child) once every message into v is known.
  for (VertexId v : ro.order) {
    auto nbrs = tree.neighbors(v);
    auto inc = tree.incident_edges(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == ro.parent[v]) continue;
      table.set(tree, inc[k], v, combine_except(v, nbrs[k]));
    }
  }
  return table;
}

PruningTables partial_likelihoods(const Tree& tree, std::span<const double> theta,
                                  const LeafConfig& cfg, VertexId root) {
  return prune(tree, theta, cfg, root);
}

std::string magnetization_csv(const Tree& tree, const MagnetizationTable& table) {
  std::ostringstream out;
  out << std::setprecision(17) << "from,to,edge,z\n";
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const Edge& ed = tree.edge(e);
    out << tree.label(ed.a) << ',' << tree.label(ed.b) << ',' << e << ','
        << table.from(tree, e, ed.a) << '\n';
    out << tree.label(ed.b) << ',' << tree.label(ed.a) << ',' << e << ','
        << table.from(tree, e, ed.b) << '\n';
  }
  return out.str();
}

}  // namespace cfn
