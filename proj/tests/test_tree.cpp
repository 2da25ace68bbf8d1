#include <algorithm>
#include <cmath>
#include <set>

#include "cfn/error.hpp"
#include "cfn/tree.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cfn;

TEST_CASE("quartet has 6 vertices, 5 edges and 4 leaves") {
  const Tree t = testing::quartet();
  CHECK(t.vertex_count() == 6);
  CHECK(t.edge_count() == 5);
  CHECK(t.leaf_count() == 4);
  CHECK(t.leaves() == std::vector<VertexId>{0, 1, 2, 3});
  CHECK(t.default_root() == 4);
  CHECK(t.edge_between(4, 5) == 4);
  CHECK(t.edge_between(0, 5) == -1);
}

TEST_CASE("two-leaf tree is accepted") {
  const Tree t(2, {{0, 1}});
  CHECK(t.leaf_count() == 2);
  CHECK(t.default_root() == 0);
}

TEST_CASE("invalid topologies are rejected") {
  // degree-2 vertex
  CHECK_THROWS_AS(Tree(3, {{0, 1}, {1, 2}}), ValidationError);
  // cycle
  CHECK_THROWS_AS(Tree(4, {{0, 1}, {1, 2}, {2, 0}, {0, 3}}), ValidationError);
  // disconnected
  CHECK_THROWS_AS(Tree(4, {{0, 1}, {2, 3}}), ValidationError);
  // degree 4
  CHECK_THROWS_AS(Tree(5, {{0, 4}, {1, 4}, {2, 4}, {3, 4}}), ValidationError);
}

TEST_CASE("generators give |V| = 2n - 2 with degrees 1 and 3") {
  for (int n = 2; n <= 30; ++n) {
    for (const Tree& t : {make_caterpillar(n), make_random_tree(n, 100 + n)}) {
      CHECK(t.leaf_count() == n);
      CHECK(t.vertex_count() == 2 * n - 2);
      CHECK(t.edge_count() == 2 * n - 3);
      for (VertexId v = 0; v < t.vertex_count(); ++v) {
        const auto d = t.neighbors(v).size();
        CHECK((d == 1 || (n > 2 && d == 3) || (n == 2 && d == 1)));
      }
    }
  }
  const Tree s = make_spine_tree(8, 3);
  CHECK(s.leaf_count() == 10 * 8);
  CHECK(s.vertex_count() == 2 * s.leaf_count() - 2);
  const auto sub = make_complete_subtree(4);
  CHECK(sub.tree.leaf_count() == 17);
  CHECK(sub.tree.is_leaf(sub.parent));
  CHECK(sub.tree.edge_between(sub.node, sub.parent) >= 0);
}

TEST_CASE("random trees are reproducible from the seed") {
  const Tree a = make_random_tree(20, 9);
  const Tree b = make_random_tree(20, 9);
  REQUIRE(a.edge_count() == b.edge_count());
  for (EdgeId e = 0; e < a.edge_count(); ++e) {
    CHECK(a.edge(e).a == b.edge(e).a);
    CHECK(a.edge(e).b == b.edge(e).b);
  }
}

TEST_CASE("edge distances on the quartet") {
  const Tree t = testing::quartet();
  CHECK(edge_distance(t, 0, 1) == 0);  // share vertex 4
  CHECK(edge_distance(t, 0, 4) == 0);
  CHECK(edge_distance(t, 0, 2) == 1);
  CHECK(edge_distance(t, 1, 3) == 1);
  CHECK_THROWS_AS(edge_distance(t, 2, 2), ValidationError);
  CHECK_THROWS_AS(edge_distance(t, 0, 9), ValidationError);
}

TEST_CASE("path decomposition on the quartet") {
  const Tree t = testing::quartet();
  // e = {0, 4}, f = {2, 5}: x = 0, y = 4, u = 5, v = 2.
  const auto pd = path_decomposition(t, 0, 2);
  CHECK(pd.distance == 1);
  CHECK(pd.y(2) == 0);
  CHECK(pd.y(1) == 4);
  CHECK(pd.y(0) == 5);
  CHECK(pd.y(-1) == 2);
  CHECK(pd.w(0) == 3);
  CHECK(pd.w(1) == 1);
  CHECK(pd.path_edge(-1) == 2);
  CHECK(pd.path_edge(1) == 0);
}

TEST_CASE("path decomposition invariants on random trees") {
  for (int n = 3; n <= 12; ++n) {
    const Tree t = make_random_tree(n, 7 * n);
    const auto dist = vertex_distances(t);
    for (EdgeId e = 0; e < t.edge_count(); ++e) {
      for (EdgeId f = 0; f < t.edge_count(); ++f) {
        if (e == f) continue;
        const auto pd = path_decomposition(t, e, f);
        const int N = pd.distance;
        CHECK(N == edge_distance(t, e, f));
        REQUIRE(pd.path.size() == static_cast<std::size_t>(N + 3));
        REQUIRE(pd.side.size() == static_cast<std::size_t>(N + 1));
        CHECK(t.edge_between(pd.y(N + 1), pd.y(N)) == e);
        CHECK(t.edge_between(pd.y(0), pd.y(-1)) == f);
        for (int j = -1; j <= N; ++j) {
          CHECK(pd.path_edge(j) == t.edge_between(pd.y(j), pd.y(j + 1)));
        }
        for (int j = 0; j <= N; ++j) {
          const VertexId w = pd.w(j);
          CHECK(pd.side_edge(j) == t.edge_between(pd.y(j), w));
          CHECK(w != pd.y(j - 1));
          CHECK(w != pd.y(j + 1));
        }
        // u is the endpoint of f nearer to e.
        const Edge& ee = t.edge(e);
        const int du = std::min(dist[pd.y(0)][ee.a], dist[pd.y(0)][ee.b]);
        const int dv = std::min(dist[pd.y(-1)][ee.a], dist[pd.y(-1)][ee.b]);
        CHECK(du < dv);
      }
    }
  }
}

TEST_CASE("leaf configurations are enumerated lexicographically") {
  CHECK(enumerate_leaf_configs(Tree(2, {{0, 1}})).size() == 4);
  const auto all = enumerate_leaf_configs(testing::quartet());
  REQUIRE(all.size() == 16);
  CHECK(all.front() == LeafConfig{1, 1, 1, 1});
  CHECK(all[1] == LeafConfig{1, 1, 1, -1});
  CHECK(all.back() == LeafConfig{-1, -1, -1, -1});
  std::set<LeafConfig> distinct(all.begin(), all.end());
  CHECK(distinct.size() == 16);
  CHECK_THROWS_AS(enumerate_leaf_configs(make_caterpillar(17)), CapError);
}

TEST_CASE("rooted order visits parents before children") {
  const Tree t = make_random_tree(15, 3);
  for (VertexId root = 0; root < t.vertex_count(); ++root) {
    const auto ro = rooted_order(t, root);
    CHECK(ro.order.front() == root);
    std::vector<int> pos(t.vertex_count());
    for (std::size_t k = 0; k < ro.order.size(); ++k) pos[ro.order[k]] = static_cast<int>(k);
    for (VertexId v = 0; v < t.vertex_count(); ++v) {
      if (v == root) {
        CHECK(ro.parent[v] == -1);
        continue;
      }
      CHECK(pos[ro.parent[v]] < pos[v]);
      CHECK(ro.parent_edge[v] == t.edge_between(v, ro.parent[v]));
    }
  }
}

TEST_CASE("newick input keeps branch lengths") {
  const auto lt = load_tree("((A:0.1,B:0.1):0.05,C:0.1,D:0.1);", TreeFormat::kNewick);
  CHECK(lt.tree.leaf_count() == 4);
  CHECK(lt.tree.edge_count() == 5);
  std::vector<double> lengths;
  for (EdgeId e = 0; e < lt.tree.edge_count(); ++e) {
    REQUIRE(lt.values[e].has_value());
    CHECK(lt.values[e]->kind == ParamKind::kLength);
    const Edge& ed = lt.tree.edge(e);
    const bool internal = !lt.tree.is_leaf(ed.a) && !lt.tree.is_leaf(ed.b);
    CHECK(lt.values[e]->value == doctest::Approx(internal ? 0.05 : 0.1));
    lengths.push_back(lt.values[e]->value);
  }
  std::sort(lengths.begin(), lengths.end());
  CHECK(lengths.front() == doctest::Approx(0.05));
  for (const char* name : {"A", "B", "C", "D"}) CHECK(lt.tree.find_label(name).has_value());
}

TEST_CASE("malformed input raises parse errors") {
  CHECK_THROWS_AS(load_tree("((A,B),C", TreeFormat::kNewick), ParseError);
  CHECK_THROWS_AS(load_tree("a b c=1", TreeFormat::kEdgeList), ParseError);
  CHECK_THROWS_AS(load_tree("a b theta=x", TreeFormat::kEdgeList), ParseError);
  CHECK_THROWS_AS(load_tree("", TreeFormat::kEdgeList), ParseError);
  CHECK_THROWS_AS(parse_tree_format("nexus"), ParseError);
  CHECK_THROWS_AS(load_tree("a b\nb c\n", TreeFormat::kEdgeList), ValidationError);
}

TEST_CASE("edge-list round trip") {
  const Tree t = make_random_tree(9, 4);
  std::vector<double> theta;
  for (EdgeId e = 0; e < t.edge_count(); ++e) theta.push_back(0.9 + 0.001 * e);
  const auto lt = load_tree(to_edge_list(t, theta), TreeFormat::kEdgeList);
  REQUIRE(lt.tree.edge_count() == t.edge_count());
  for (EdgeId e = 0; e < t.edge_count(); ++e) {
    CHECK(lt.tree.label(lt.tree.edge(e).a) == t.label(t.edge(e).a));
    CHECK(lt.tree.label(lt.tree.edge(e).b) == t.label(t.edge(e).b));
    REQUIRE(lt.values[e].has_value());
    CHECK(lt.values[e]->kind == ParamKind::kTheta);
    CHECK(lt.values[e]->value == theta[e]);
  }
}
