#include "cfn/tree.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "cfn/error.hpp"
#include "cfn/rng.hpp"

namespace cfn {

Tree::Tree(int vertex_count, std::vector<Edge> edges, std::vector<std::string> labels)
    : adjacency_(vertex_count), incident_(vertex_count), edges_(std::move(edges)) {
  if (vertex_count < 2) {
    throw ValidationError("tree needs at least two vertices");
  }
  if (static_cast<int>(edges_.size()) != vertex_count - 1) {
    throw ValidationError("tree with " + std::to_string(vertex_count) + " vertices needs " +
                          std::to_string(vertex_count - 1) + " edges, got " +
                          std::to_string(edges_.size()));
  }
  for (int e = 0; e < edge_count(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.a < 0 || ed.b < 0 || ed.a >= vertex_count || ed.b >= vertex_count) {
      throw ValidationError("edge " + std::to_string(e) + " references an unknown vertex");
    }
    if (ed.a == ed.b) {
      throw ValidationError("edge " + std::to_string(e) + " is a self-loop");
    }
    if (edge_between(ed.a, ed.b) >= 0) {
      throw ValidationError("duplicate edge between " + std::to_string(ed.a) + " and " +
                            std::to_string(ed.b));
    }
    adjacency_[ed.a].push_back(ed.b);
    incident_[ed.a].push_back(e);
    adjacency_[ed.b].push_back(ed.a);
    incident_[ed.b].push_back(e);
  }

  // V - 1 edges plus connectivity implies acyclic.
  std::vector<char> seen(vertex_count, 0);
  std::vector<VertexId> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    for (VertexId w : adjacency_[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != vertex_count) {
    throw ValidationError("edges do not form a connected tree (cycle or disconnected part)");
  }

  leaf_index_.assign(vertex_count, -1);
  for (VertexId v = 0; v < vertex_count; ++v) {
    auto degree = adjacency_[v].size();
    if (degree != 1 && degree != 3) {
      throw ValidationError("vertex " + std::to_string(v) + " has degree " +
                            std::to_string(degree) + "; only 1 or 3 are allowed");
    }
    if (degree == 1) {
      leaf_index_[v] = static_cast<int>(leaves_.size());
      leaves_.push_back(v);
    }
  }

  labels_ = std::move(labels);
  labels_.resize(vertex_count);
  for (VertexId v = 0; v < vertex_count; ++v) {
    if (labels_[v].empty()) labels_[v] = std::to_string(v);
  }
}

EdgeId Tree::edge_between(VertexId a, VertexId b) const {
  const auto& nbrs = adjacency_[a];
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    if (nbrs[i] == b) return incident_[a][i];
  }
  return -1;
}

std::optional<VertexId> Tree::find_label(const std::string& name) const {
  auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<VertexId>(it - labels_.begin());
}

VertexId Tree::default_root() const {
  for (VertexId v = 0; v < vertex_count(); ++v) {
    if (!is_leaf(v)) return v;
  }
  return 0;
}

namespace {

std::vector<int> bfs_distances(const Tree& tree, VertexId source,
                               std::vector<VertexId>* parent = nullptr) {
  std::vector<int> dist(tree.vertex_count(), -1);
  if (parent) parent->assign(tree.vertex_count(), -1);
  std::queue<VertexId> queue;
  dist[source] = 0;
  queue.push(source);
  while (!queue.empty()) {
    VertexId v = queue.front();
    queue.pop();
    for (VertexId w : tree.neighbors(v)) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        if (parent) (*parent)[w] = v;
        queue.push(w);
      }
    }
  }
  return dist;
}

void check_edge_pair(const Tree& tree, EdgeId e, EdgeId f) {
  if (e < 0 || f < 0 || e >= tree.edge_count() || f >= tree.edge_count()) {
    throw ValidationError("unknown edge id");
  }
  if (e == f) {
    throw ValidationError("edge pair must be distinct (use the diagonal path for e == f)");
  }
}

}  // namespace

RootedOrder rooted_order(const Tree& tree, VertexId root) {
  if (root < 0 || root >= tree.vertex_count()) throw ValidationError("unknown root vertex");
  RootedOrder ro;
  ro.root = root;
  ro.parent.assign(tree.vertex_count(), -1);
  ro.parent_edge.assign(tree.vertex_count(), -1);
  ro.order.reserve(tree.vertex_count());
  ro.order.push_back(root);
  for (std::size_t i = 0; i < ro.order.size(); ++i) {
    VertexId v = ro.order[i];
    auto nbrs = tree.neighbors(v);
    auto inc = tree.incident_edges(v);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == ro.parent[v]) continue;
      ro.parent[nbrs[k]] = v;
      ro.parent_edge[nbrs[k]] = inc[k];
      ro.order.push_back(nbrs[k]);
    }
  }
  return ro;
}

std::vector<std::vector<int>> vertex_distances(const Tree& tree) {
  std::vector<std::vector<int>> out;
  out.reserve(tree.vertex_count());
  for (VertexId v = 0; v < tree.vertex_count(); ++v) out.push_back(bfs_distances(tree, v));
  return out;
}

int edge_distance(const Tree& tree, EdgeId e, EdgeId f) {
  check_edge_pair(tree, e, f);
  const Edge& ee = tree.edge(e);
  const Edge& ff = tree.edge(f);
  auto da = bfs_distances(tree, ee.a);
  auto db = bfs_distances(tree, ee.b);
  return std::min({da[ff.a], da[ff.b], db[ff.a], db[ff.b]});
}

PathDecomposition path_decomposition(const Tree& tree, EdgeId e, EdgeId f) {
  check_edge_pair(tree, e, f);
  const Edge& ee = tree.edge(e);
  const Edge& ff = tree.edge(f);
  auto da = bfs_distances(tree, ee.a);
  auto db = bfs_distances(tree, ee.b);

  // y is the endpoint of e on f's side.
  int near_a = std::min(da[ff.a], da[ff.b]);
  int near_b = std::min(db[ff.a], db[ff.b]);
  VertexId y = near_a < near_b ? ee.a : ee.b;
  VertexId x = ee.other(y);
  const auto& dy = y == ee.a ? da : db;
  VertexId u = dy[ff.a] < dy[ff.b] ? ff.a : ff.b;
  VertexId v = ff.other(u);

  std::vector<VertexId> parent;
  bfs_distances(tree, y, &parent);

  PathDecomposition pd;
  pd.e = e;
  pd.f = f;
  pd.distance = dy[u];
  const int n = pd.distance;

  // Walk u -> y to collect y_0..y_N.
  std::vector<VertexId> up;  // y_0, y_1, ..., y_N
  for (VertexId cur = u;; cur = parent[cur]) {
    up.push_back(cur);
    if (cur == y) break;
  }
  pd.path.reserve(n + 3);
  pd.path.push_back(x);
  for (int j = n; j >= 0; --j) pd.path.push_back(up[j]);
  pd.path.push_back(v);

  pd.path_edges.resize(n + 2);
  for (int j = -1; j <= n; ++j) pd.path_edges[j + 1] = tree.edge_between(pd.y(j), pd.y(j + 1));

  pd.side.resize(n + 1);
  pd.side_edges.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    VertexId yj = pd.y(j);
    VertexId prev = pd.y(j - 1);
    VertexId next = pd.y(j + 1);
    auto nbrs = tree.neighbors(yj);
    auto inc = tree.incident_edges(yj);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] != prev && nbrs[k] != next) {
        pd.side[j] = nbrs[k];
        pd.side_edges[j] = inc[k];
      }
    }
  }
  return pd;
}

LeafConfig leaf_config_from_index(int leaf_count, std::uint64_t index) {
  LeafConfig cfg(leaf_count);
  for (int i = 0; i < leaf_count; ++i) {
    cfg[i] = ((index >> (leaf_count - 1 - i)) & 1ULL) ? Spin{-1} : Spin{1};
  }
  return cfg;
}

std::vector<LeafConfig> enumerate_leaf_configs(const Tree& tree, int cap) {
  const int n = tree.leaf_count();
  if (n > cap) {
    throw CapError("exact enumeration over 2^" + std::to_string(n) +
                   " leaf configurations exceeds the cap of 2^" + std::to_string(cap));
  }
  std::vector<LeafConfig> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint64_t k = 0; k < (std::uint64_t{1} << n); ++k) {
    out.push_back(leaf_config_from_index(n, k));
  }
  return out;
}

Tree make_caterpillar(int leaf_count) {
  if (leaf_count < 2) throw ValidationError("caterpillar needs at least two leaves");
  const int n = leaf_count;
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("L" + std::to_string(i));
  if (n == 2) return Tree(2, {{0, 1}}, labels);

  // Leaves 0..n-1, spine vertices n..2n-3.
  const int spine = n - 2;
  std::vector<Edge> edges;
  auto spine_vertex = [n](int i) { return n + i; };
  edges.push_back({0, spine_vertex(0)});
  for (int i = 1; i < n - 1; ++i) edges.push_back({i, spine_vertex(std::min(i - 1, spine - 1))});
  edges.push_back({n - 1, spine_vertex(spine - 1)});
  for (int i = 0; i + 1 < spine; ++i) edges.push_back({spine_vertex(i), spine_vertex(i + 1)});
  for (int i = 0; i < spine; ++i) labels.push_back("s" + std::to_string(i));
  return Tree(2 * n - 2, std::move(edges), std::move(labels));
}

Tree make_random_tree(int leaf_count, std::uint64_t seed) {
  if (leaf_count < 2) throw ValidationError("random tree needs at least two leaves");
  // Grow by subdividing a uniformly chosen edge and hanging a new leaf off the
  // midpoint. Ids are renumbered at the end so leaves come first.
  CounterRng rng(seed, Stream::kTopology);
  std::vector<Edge> edges{{0, 1}};
  int next = 2;
  for (int k = 2; k < leaf_count; ++k) {
    auto pick = static_cast<std::size_t>(rng.uniform(k) * edges.size());
    Edge old = edges[pick];
    int mid = next++;
    int leaf = next++;
    edges[pick] = {old.a, mid};
    edges.push_back({mid, old.b});
    edges.push_back({mid, leaf});
  }
  const int vcount = next;
  std::vector<int> degree(vcount, 0);
  for (const auto& ed : edges) {
    ++degree[ed.a];
    ++degree[ed.b];
  }
  std::vector<int> remap(vcount);
  int id = 0;
  for (int v = 0; v < vcount; ++v)
    if (degree[v] == 1) remap[v] = id++;
  for (int v = 0; v < vcount; ++v)
    if (degree[v] != 1) remap[v] = id++;
  for (auto& ed : edges) ed = {remap[ed.a], remap[ed.b]};
  std::vector<std::string> labels(vcount);
  for (int v = 0; v < leaf_count; ++v) labels[v] = "t" + std::to_string(v);
  return Tree(vcount, std::move(edges), std::move(labels));
}

Tree make_spine_tree(int spine_length, int depth) {
  if (spine_length < 2) throw ValidationError("spine tree needs at least two spine vertices");
  if (depth < 0 || depth > 12) throw ValidationError("spine tree depth must be in [0, 12]");
  std::vector<Edge> edges;
  std::vector<std::string> labels;
  auto vertex = [&](std::string name) {
    labels.push_back(std::move(name));
    return static_cast<int>(labels.size()) - 1;
  };
  std::vector<int> spine;
  for (int i = 0; i < spine_length; ++i) spine.push_back(vertex("s" + std::to_string(i)));
  for (int i = 0; i + 1 < spine_length; ++i) edges.push_back({spine[i], spine[i + 1]});
  int leaves = 0;
  auto hang = [&](int at) {
    std::vector<int> level{vertex(depth == 0 ? "t" + std::to_string(leaves++) : "")};
    edges.push_back({at, level[0]});
    for (int d = 0; d < depth; ++d) {
      std::vector<int> children;
      for (int v : level) {
        for (int k = 0; k < 2; ++k) {
          const int c = vertex(d + 1 == depth ? "t" + std::to_string(leaves++) : "");
          edges.push_back({v, c});
          children.push_back(c);
        }
      }
      level = std::move(children);
    }
  };
  for (int i = 0; i < spine_length; ++i) {
    const int count = (i == 0 || i + 1 == spine_length) ? 2 : 1;
    for (int k = 0; k < count; ++k) hang(spine[i]);
  }
  const int n = static_cast<int>(labels.size());
  return Tree(n, std::move(edges), std::move(labels));
}

RootedSubtree make_complete_subtree(int depth) {
  if (depth < 1) throw ValidationError("complete subtree depth must be at least 1");
  // Vertex 0 = u, vertex 1 = parent leaf p, heap-ordered subtree below u.
  std::vector<Edge> edges{{0, 1}};
  std::vector<std::string> labels{"u", "p"};
  int next = 2;
  std::vector<int> level{0};
  for (int d = 0; d < depth; ++d) {
    std::vector<int> children;
    for (int v : level) {
      for (int k = 0; k < 2; ++k) {
        int c = next++;
        edges.push_back({v, c});
        labels.push_back((d + 1 == depth ? "leaf" : "n") + std::to_string(c));
        children.push_back(c);
      }
    }
    level = std::move(children);
  }
  RootedSubtree out{Tree(next, std::move(edges), std::move(labels)), 0, 1};
  return out;
}

}  // namespace cfn
