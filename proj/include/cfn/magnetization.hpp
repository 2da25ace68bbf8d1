#pragma once

// Magnetizations: posterior mean spin at a vertex given the leaves of one of its
// descendant subtrees. Z(a->b) is the magnetization at a for the subtree hanging
// off a away from its neighbor b.

#include <span>
#include <string>
#include <vector>

#include "cfn/model.hpp"
#include "cfn/tree.hpp"

namespace cfn {

inline constexpr double kQFloor = 1e-300;

// q(x, y) = (x + y) / (1 + x y). Throws DomainError when 1 + x y <= floor.
double q_combine(double x, double y, double floor = kQFloor);

// Z at every vertex for its descendant subtree when the tree is rooted at `root`.
std::vector<double> upward_magnetizations(const Tree& tree, std::span<const double> theta,
                                          const LeafConfig& cfg, VertexId root);

class MagnetizationTable {
 public:
  MagnetizationTable() = default;
  explicit MagnetizationTable(int edge_count) : values_(2 * static_cast<std::size_t>(edge_count)) {}

  // Z(from -> other endpoint of e).
  double from(const Tree& tree, EdgeId e, VertexId from) const {
    return values_[slot(tree, e, from)];
  }
  void set(const Tree& tree, EdgeId e, VertexId from, double z) {
    values_[slot(tree, e, from)] = z;
  }
  std::size_t size() const { return values_.size(); }
  // Entry 2e is Z(edge(e).a -> edge(e).b), entry 2e+1 the reverse.
  const std::vector<double>& raw() const { return values_; }

 private:
  static std::size_t slot(const Tree& tree, EdgeId e, VertexId from) {
    return 2 * static_cast<std::size_t>(e) + (tree.edge(e).a == from ? 0 : 1);
  }
  std::vector<double> values_;
};

// Two passes over the default rooting fill all 2|E| entries.
MagnetizationTable directed_magnetizations(const Tree& tree, std::span<const double> theta,
                                           const LeafConfig& cfg);

// Pruning tables; (L+ - L-) / (L+ + L-) at v equals the upward magnetization.
PruningTables partial_likelihoods(const Tree& tree, std::span<const double> theta,
                                  const LeafConfig& cfg, VertexId root);

// CSV rows "from,to,edge,z".
std::string magnetization_csv(const Tree& tree, const MagnetizationTable& table);

}  // namespace cfn
