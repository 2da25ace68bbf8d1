#pragma once

// Brute-force references used by the unit tests. They only touch the edge
// list, so they share no code path with the library's pruning.

#include <cmath>
#include <cstdint>
#include <vector>

#include "cfn/tree.hpp"

namespace cfn::testing {

// Quartet ((0,1),(2,3)) with internal vertices 4 and 5; edges 0..3 pendant, 4 internal.
inline Tree quartet() { return Tree(6, {{0, 4}, {1, 4}, {2, 5}, {3, 5}, {4, 5}}); }

// P(leaf pattern) = sum over internal spins of 2^-1 prod_e (1 + theta_e s_a s_b) / 2.
inline double brute_probability(const Tree& tree, const std::vector<double>& theta,
                                const LeafConfig& cfg) {
  std::vector<VertexId> internal;
  for (VertexId v = 0; v < tree.vertex_count(); ++v) {
    if (!tree.is_leaf(v)) internal.push_back(v);
  }
  std::vector<int> s(tree.vertex_count(), 1);
  for (VertexId v : tree.leaves()) s[v] = cfg[tree.leaf_index(v)];
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << internal.size()); ++mask) {
    for (std::size_t k = 0; k < internal.size(); ++k) s[internal[k]] = (mask >> k) & 1 ? -1 : 1;
    double p = 0.5;
    for (EdgeId e = 0; e < tree.edge_count(); ++e) {
      const Edge& ed = tree.edge(e);
      p *= 0.5 * (1.0 + theta[e] * s[ed.a] * s[ed.b]);
    }
    total += p;
  }
  return total;
}

// Posterior mean of the spin at v given the leaves.
inline double brute_posterior_mean(const Tree& tree, const std::vector<double>& theta,
                                   const LeafConfig& cfg, VertexId v) {
  std::vector<VertexId> internal;
  for (VertexId u = 0; u < tree.vertex_count(); ++u) {
    if (!tree.is_leaf(u)) internal.push_back(u);
  }
  std::vector<int> s(tree.vertex_count(), 1);
  for (VertexId u : tree.leaves()) s[u] = cfg[tree.leaf_index(u)];
  double num = 0.0, den = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << internal.size()); ++mask) {
    for (std::size_t k = 0; k < internal.size(); ++k) s[internal[k]] = (mask >> k) & 1 ? -1 : 1;
    double p = 1.0;
    for (EdgeId e = 0; e < tree.edge_count(); ++e) {
      const Edge& ed = tree.edge(e);
      p *= 0.5 * (1.0 + theta[e] * s[ed.a] * s[ed.b]);
    }
    num += s[v] * p;
    den += p;
  }
  return num / den;
}

inline double brute_loglik(const Tree& tree, const std::vector<double>& theta,
                           const std::vector<LeafConfig>& cfgs) {
  double l = 0.0;
  for (const auto& c : cfgs) l += std::log(brute_probability(tree, theta, c));
  return l / static_cast<double>(cfgs.size());
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace cfn::testing
