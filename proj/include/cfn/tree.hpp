#pragma once

// Unrooted binary tree topology with stable edge ids.
//
// Vertices are 0..V-1, edges 0..E-1 in construction (file) order. Every vertex has
// degree 1 or 3; the two-leaf tree (a single edge) is accepted as the minimal case.
// Edge ids index every per-edge vector in the library (parameters, gradients,
// Hessian rows).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cfn {

using VertexId = int;
using EdgeId = int;
using Spin = std::int8_t;

struct Edge {
  VertexId a = 0;
  VertexId b = 0;

  VertexId other(VertexId v) const { return v == a ? b : a; }
  bool touches(VertexId v) const { return v == a || v == b; }
};

class Tree {
 public:
  Tree() = default;
  // Throws ValidationError unless the edges form a tree with degrees in {1,3}.
  Tree(int vertex_count, std::vector<Edge> edges, std::vector<std::string> labels = {});

  int vertex_count() const { return static_cast<int>(adjacency_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int leaf_count() const { return static_cast<int>(leaves_.size()); }

  // Leaves sorted by vertex id. LeafConfig entries follow this order.
  const std::vector<VertexId>& leaves() const { return leaves_; }
  bool is_leaf(VertexId v) const { return leaf_index_[v] >= 0; }
  int leaf_index(VertexId v) const { return leaf_index_[v]; }

  std::span<const VertexId> neighbors(VertexId v) const { return adjacency_[v]; }
  // Parallel to neighbors(v).
  std::span<const EdgeId> incident_edges(VertexId v) const { return incident_[v]; }

  const Edge& edge(EdgeId e) const { return edges_[e]; }
  const std::vector<Edge>& edges() const { return edges_; }
  // Edge joining a and b, or -1.
  EdgeId edge_between(VertexId a, VertexId b) const;

  const std::string& label(VertexId v) const { return labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<VertexId> find_label(const std::string& name) const;

  // Lowest-id internal vertex; vertex 0 for the two-leaf tree.
  VertexId default_root() const;

 private:
  std::vector<std::vector<VertexId>> adjacency_;
  std::vector<std::vector<EdgeId>> incident_;
  std::vector<Edge> edges_;
  std::vector<VertexId> leaves_;
  std::vector<int> leaf_index_;
  std::vector<std::string> labels_;
};

// Geometry between two distinct edges e and f, oriented so that f lies in the
// subtree T_y cut off by e = {x, y}, with u the endpoint of f closer to y:
//
//   x = y_{N+1} -- y = y_N -- ... -- y_0 = u -- y_{-1} = v
//                   |                 |
//                  w_N               w_0
struct PathDecomposition {
  EdgeId e = -1;
  EdgeId f = -1;
  int distance = 0;                   // N
  std::vector<VertexId> path;         // y_{N+1}, y_N, ..., y_0, y_{-1}
  std::vector<VertexId> side;         // w_0, ..., w_N
  std::vector<EdgeId> path_edges;     // {y_j, y_{j+1}} for j = -1..N (f first, e last)
  std::vector<EdgeId> side_edges;     // {y_j, w_j} for j = 0..N

  VertexId y(int j) const { return path[distance + 1 - j]; }
  VertexId w(int j) const { return side[j]; }
  EdgeId path_edge(int j) const { return path_edges[j + 1]; }
  EdgeId side_edge(int j) const { return side_edges[j]; }
};

// Traversal of the tree rooted at a vertex: BFS preorder, parent and parent
// edge per vertex (-1 at the root).
struct RootedOrder {
  VertexId root = -1;
  std::vector<VertexId> order;
  std::vector<VertexId> parent;
  std::vector<EdgeId> parent_edge;
};
RootedOrder rooted_order(const Tree& tree, VertexId root);

// Graph distance between the nearest endpoints of e and f; 0 when they share a
// vertex. Throws ValidationError when e == f or an id is unknown.
int edge_distance(const Tree& tree, EdgeId e, EdgeId f);

PathDecomposition path_decomposition(const Tree& tree, EdgeId e, EdgeId f);

// All vertex-to-vertex distances (BFS from each vertex).
std::vector<std::vector<int>> vertex_distances(const Tree& tree);

using LeafConfig = std::vector<Spin>;  // one spin per leaf, in Tree::leaves() order
using SpinConfig = std::vector<Spin>;  // one spin per vertex

inline constexpr int kDefaultEnumerationCap = 16;

// Configuration k assigns -1 to leaf i iff bit (n-1-i) of k is set, so the
// sequence is lexicographic over leaves sorted by id with + before -.
LeafConfig leaf_config_from_index(int leaf_count, std::uint64_t index);
std::vector<LeafConfig> enumerate_leaf_configs(const Tree& tree,
                                               int cap = kDefaultEnumerationCap);

// Generators used by experiments and tests.
Tree make_caterpillar(int leaf_count);
Tree make_random_tree(int leaf_count, std::uint64_t seed);
// Path s0..s(L-1) with a complete binary subtree of the given depth hanging off
// every spine vertex (two off each end), so side signals come from subtrees
// rather than single leaves. Depth 0 hangs plain leaves.
Tree make_spine_tree(int spine_length, int depth);

// Leaf p -- u -- complete binary subtree of the given depth below u.
struct RootedSubtree {
  Tree tree;
  VertexId node = -1;    // u
  VertexId parent = -1;  // the leaf hanging off u on the other side
};
RootedSubtree make_complete_subtree(int depth);

// ---- text formats ---------------------------------------------------------

enum class TreeFormat { kEdgeList, kNewick };
enum class ParamKind { kTheta, kP, kLength };

struct RawEdgeValue {
  ParamKind kind = ParamKind::kTheta;
  double value = 0.0;
};

struct LoadedTree {
  Tree tree;
  // One entry per edge id; empty when the input carried no value for that edge.
  std::vector<std::optional<RawEdgeValue>> values;
};

// Throws ParseError on malformed text and ValidationError on invalid topology.
LoadedTree load_tree(const std::string& text, TreeFormat format);
LoadedTree load_tree_file(const std::string& path, TreeFormat format);
TreeFormat parse_tree_format(const std::string& name);

// Serializes as an edge-list; values (if given) are written as theta=.
std::string to_edge_list(const Tree& tree, std::span<const double> theta = {});

}  // namespace cfn
