#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "cfn/error.hpp"
#include "cfn/tree.hpp"

namespace cfn {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

double parse_number(const std::string& text, int line_no) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
  return value;
}

LoadedTree load_edge_list(const std::string& text) {
  std::map<std::string, int> ids;
  std::vector<std::string> names;
  std::vector<Edge> edges;
  std::vector<std::optional<RawEdgeValue>> values;
  std::vector<std::pair<std::string, std::string>> leaf_labels;

  auto vertex = [&](const std::string& token) {
    auto [it, inserted] = ids.emplace(token, static_cast<int>(names.size()));
    if (inserted) names.push_back(token);
    return it->second;
  };

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(strip_comment(line));
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;

    if (tokens[0] == "leaf") {
      if (tokens.size() != 3) {
        throw ParseError("line " + std::to_string(line_no) + ": expected 'leaf <id> <name>'");
      }
      leaf_labels.emplace_back(tokens[1], tokens[2]);
      continue;
    }
    if (tokens.size() < 2 || tokens.size() > 3) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'u v [key=value]'");
    }
    std::optional<RawEdgeValue> value;
    if (tokens.size() == 3) {
      auto eq = tokens[2].find('=');
      if (eq == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                         tokens[2] + "'");
      }
      std::string key = tokens[2].substr(0, eq);
      RawEdgeValue raw;
      if (key == "theta") {
        raw.kind = ParamKind::kTheta;
      } else if (key == "p") {
        raw.kind = ParamKind::kP;
      } else if (key == "len") {
        raw.kind = ParamKind::kLength;
      } else {
        throw ParseError("line " + std::to_string(line_no) + ": unknown key '" + key +
                         "' (expected theta, p or len)");
      }
      raw.value = parse_number(tokens[2].substr(eq + 1), line_no);
      value = raw;
    }
    edges.push_back({vertex(tokens[0]), vertex(tokens[1])});
    values.push_back(value);
  }
  if (edges.empty()) throw ParseError("edge list contains no edges");

  for (const auto& [token, name] : leaf_labels) {
    auto it = ids.find(token);
    if (it == ids.end()) throw ParseError("leaf line names unknown vertex '" + token + "'");
    names[it->second] = name;
  }
  LoadedTree out{Tree(static_cast<int>(names.size()), std::move(edges), names),
                 std::move(values)};
  return out;
}

// ---- Newick ----------------------------------------------------------------

struct NewickNode {
  std::string label;
  std::optional<double> length;
  std::vector<int> children;
  int completion = -1;  // order in which the node's branch closed in the text
};

class NewickParser {
 public:
  explicit NewickParser(const std::string& text) : text_(text) {}

  std::vector<NewickNode> parse(int& root) {
    skip();
    root = subtree();
    skip();
    if (pos_ >= text_.size() || text_[pos_] != ';') fail("expected ';' at end of tree");
    ++pos_;
    skip();
    if (pos_ != text_.size()) fail("trailing characters after ';'");
    return std::move(nodes_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("newick: " + what + " at offset " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '[') {
        auto close = text_.find(']', pos_);
        if (close == std::string::npos) fail("unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  std::string label() {
    skip();
    std::string out;
    if (pos_ < text_.size() && text_[pos_] == '\'') {
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != '\'') out += text_[pos_++];
      if (pos_ >= text_.size()) fail("unterminated quoted label");
      ++pos_;
      return out;
    }
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
          std::isspace(static_cast<unsigned char>(c))) {
        break;
      }
      out += c;
      ++pos_;
    }
    return out;
  }

  int subtree() {
    skip();
    int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      while (true) {
        int child = subtree();
        nodes_[id].children.push_back(child);
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail("expected ',' or ')'");
      }
    }
    nodes_[id].label = label();
    skip();
    if (pos_ < text_.size() && text_[pos_] == ':') {
      ++pos_;
      skip();
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
              text_[pos_] == 'e' || text_[pos_] == 'E' || text_[pos_] == '-' ||
              text_[pos_] == '+')) {
        ++pos_;
      }
      std::string number = text_.substr(start, pos_ - start);
      std::size_t used = 0;
      double len = 0.0;
      try {
        len = std::stod(number, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (number.empty() || used != number.size()) fail("bad branch length '" + number + "'");
      nodes_[id].length = len;
    }
    if (nodes_[id].children.empty() && nodes_[id].label.empty()) fail("leaf without a label");
    nodes_[id].completion = completed_++;
    return id;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::vector<NewickNode> nodes_;
  int completed_ = 0;
};

LoadedTree load_newick(const std::string& text) {
  int root = 0;
  auto nodes = NewickParser(text).parse(root);
  const auto& root_children = nodes[root].children;
  if (root_children.size() < 2) throw ValidationError("newick root must have 2 or 3 children");

  // Vertex ids in preorder; a degree-2 root is suppressed.
  const bool suppress_root = root_children.size() == 2;
  std::vector<int> vertex_of(nodes.size(), -1);
  std::vector<int> order;
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    order.push_back(node);
    const auto& ch = nodes[node].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  int next = 0;
  std::vector<std::string> labels;
  for (int node : order) {
    if (suppress_root && node == root) continue;
    vertex_of[node] = next++;
    labels.push_back(nodes[node].label);
  }

  // Edges ordered by where their branch closes in the text.
  struct PendingEdge {
    int key;
    Edge edge;
    std::optional<RawEdgeValue> value;
  };
  std::vector<PendingEdge> pending;
  auto raw_len = [](const std::optional<double>& len) -> std::optional<RawEdgeValue> {
    if (!len) return std::nullopt;
    return RawEdgeValue{ParamKind::kLength, *len};
  };
  for (int node : order) {
    if (node == root) continue;
    bool parent_is_root = false;
    int parent = -1;
    for (int p : order) {
      for (int c : nodes[p].children) {
        if (c == node) parent = p;
      }
    }
    parent_is_root = parent == root;
    if (suppress_root && parent_is_root) continue;
    pending.push_back({nodes[node].completion, {vertex_of[parent], vertex_of[node]},
                       raw_len(nodes[node].length)});
  }
  if (suppress_root) {
    int left = root_children[0];
    int right = root_children[1];
    std::optional<RawEdgeValue> merged;
    if (nodes[left].length && nodes[right].length) {
      merged = RawEdgeValue{ParamKind::kLength, *nodes[left].length + *nodes[right].length};
    }
    pending.push_back(
        {nodes[left].completion, {vertex_of[left], vertex_of[right]}, merged});
  }
  std::sort(pending.begin(), pending.end(),
            [](const PendingEdge& a, const PendingEdge& b) { return a.key < b.key; });

  std::vector<Edge> edges;
  std::vector<std::optional<RawEdgeValue>> values;
  for (auto& p : pending) {
    edges.push_back(p.edge);
    values.push_back(p.value);
  }
  for (int v = 0; v < next; ++v) {
    if (labels[v].empty()) labels[v] = "i" + std::to_string(v);
  }
  LoadedTree out{Tree(next, std::move(edges), std::move(labels)), std::move(values)};
  return out;
}

}  // namespace

LoadedTree load_tree(const std::string& text, TreeFormat format) {
  return format == TreeFormat::kEdgeList ? load_edge_list(text) : load_newick(text);
}

LoadedTree load_tree_file(const std::string& path, TreeFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read tree file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_tree(buffer.str(), format);
}

TreeFormat parse_tree_format(const std::string& name) {
  if (name == "edge-list" || name == "edgelist" || name == "el") return TreeFormat::kEdgeList;
  if (name == "newick" || name == "nwk") return TreeFormat::kNewick;
  throw ParseError("unknown tree format '" + name + "' (expected edge-list or newick)");
}

std::string to_edge_list(const Tree& tree, std::span<const double> theta) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (EdgeId e = 0; e < tree.edge_count(); ++e) {
    const Edge& ed = tree.edge(e);
    out << tree.label(ed.a) << ' ' << tree.label(ed.b);
    if (!theta.empty()) out << " theta=" << theta[e];
    out << '\n';
  }
  return out.str();
}

}  // namespace cfn
