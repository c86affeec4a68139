#include "relate/tree.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <set>

#include "relate/error.hpp"

namespace relate {

std::size_t Phylogeny::add_leaf(std::string label) {
  if (label.empty()) throw DomainError("leaf labels must be non-empty");
  labels_.push_back(std::move(label));
  adjacency_.emplace_back();
  return labels_.size() - 1;
}

std::size_t Phylogeny::add_internal() {
  labels_.emplace_back();
  adjacency_.emplace_back();
  return labels_.size() - 1;
}

std::size_t Phylogeny::add_edge(std::size_t a, std::size_t b, double length) {
  edges_.push_back({a, b, length});
  adjacency_[a].push_back(edges_.size() - 1);
  adjacency_[b].push_back(edges_.size() - 1);
  return edges_.size() - 1;
}

std::size_t Phylogeny::n_leaves() const {
  return static_cast<std::size_t>(std::count_if(labels_.begin(), labels_.end(), [](const auto& l) { return !l.empty(); }));
}

std::vector<std::size_t> Phylogeny::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n_nodes(); ++v)
    if (is_leaf(v)) out.push_back(v);
  std::sort(out.begin(), out.end(), [&](std::size_t x, std::size_t y) { return labels_[x] < labels_[y]; });
  return out;
}

std::vector<std::string> Phylogeny::leaf_labels() const {
  std::vector<std::string> out;
  for (auto v : leaves()) out.push_back(labels_[v]);
  return out;
}

std::size_t Phylogeny::leaf_node(std::string_view label) const {
  for (std::size_t v = 0; v < n_nodes(); ++v)
    if (labels_[v] == label) return v;
  throw LookupError("no leaf labelled " + std::string(label));
}

bool Phylogeny::is_binary() const {
  if (n_nodes() == 1) return true;
  for (std::size_t v = 0; v < n_nodes(); ++v) {
    if (is_leaf(v) && degree(v) != 1) return false;
    if (!is_leaf(v) && degree(v) != 3) return false;
  }
  return true;
}

void Phylogeny::validate() const {
  if (n_nodes() == 0) throw DomainError("tree has no nodes");
  if (n_edges() + 1 != n_nodes()) throw DomainError("tree edge count does not match node count");
  std::vector<bool> seen(n_nodes(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (auto e : adjacency_[v]) {
      const auto w = other(e, v);
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n_nodes()) throw DomainError("tree is disconnected");
  std::set<std::string> names;
  for (std::size_t v = 0; v < n_nodes(); ++v) {
    if (is_leaf(v) && !names.insert(labels_[v]).second) throw DomainError("duplicate leaf label " + labels_[v]);
    if (!is_leaf(v) && degree(v) < 3) throw DomainError("internal node of degree " + std::to_string(degree(v)));
    if (is_leaf(v) && n_nodes() > 1 && degree(v) != 1) throw DomainError("leaf " + labels_[v] + " is not a tip");
  }
  for (const auto& e : edges_)
    if (!(e.length >= 0.0)) throw DomainError("negative branch length");
}

std::vector<std::size_t> Phylogeny::internal_edges() const {
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < n_edges(); ++e)
    if (!is_leaf(edges_[e].a) && !is_leaf(edges_[e].b)) out.push_back(e);
  return out;
}

void Phylogeny::replace_endpoint(std::size_t e, std::size_t from, std::size_t to) {
  auto& edge = edges_[e];
  if (edge.a == from) edge.a = to;
  else edge.b = to;
  auto& src = adjacency_[from];
  src.erase(std::find(src.begin(), src.end(), e));
  adjacency_[to].push_back(e);
}

bool Phylogeny::nni(std::size_t e, int which) {
  const std::size_t a = edges_[e].a, b = edges_[e].b;
  if (is_leaf(a) || is_leaf(b) || degree(a) != 3 || degree(b) != 3) return false;
  std::vector<std::size_t> at_a, at_b;
  for (auto f : adjacency_[a])
    if (f != e) at_a.push_back(f);
  for (auto f : adjacency_[b])
    if (f != e) at_b.push_back(f);
  const std::size_t fa = at_a[0];
  const std::size_t fb = at_b[static_cast<std::size_t>(which)];
  replace_endpoint(fa, a, b);
  replace_endpoint(fb, b, a);
  return true;
}

std::size_t Phylogeny::virtual_root() const {
  for (std::size_t v = 0; v < n_nodes(); ++v)
    if (!is_leaf(v)) return v;
  return 0;
}

std::vector<std::size_t> Phylogeny::edge_preorder() const {
  std::vector<std::size_t> order;
  if (n_nodes() == 0) return order;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{virtual_root(), static_cast<std::size_t>(-1)}};
  while (!stack.empty()) {
    const auto [v, via] = stack.back();
    stack.pop_back();
    if (via != static_cast<std::size_t>(-1)) order.push_back(via);
    const auto& inc = adjacency_[v];
    for (auto it = inc.rbegin(); it != inc.rend(); ++it)
      if (*it != via) stack.emplace_back(other(*it, v), *it);
  }
  return order;
}

// ---------------------------------------------------------------- Newick --

namespace {

struct RawNode {
  std::string label;
  std::optional<double> length;
  std::vector<std::unique_ptr<RawNode>> children;
};

class NewickParser {
 public:
  explicit NewickParser(std::string_view text) : s_(text) {}

  std::unique_ptr<RawNode> parse() {
    skip();
    auto root = subtree();
    skip();
    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      root->length = number();
      skip();
    }
    if (pos_ >= s_.size()) fail("expected ';' at end of input");
    if (s_[pos_] != ';') fail(std::string("unexpected '") + s_[pos_] + "'");
    ++pos_;
    skip();
    if (pos_ != s_.size()) fail("trailing characters after ';'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw NewickError(what, pos_); }

  void skip() {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == '[') {
        const auto close = s_.find(']', pos_);
        if (close == std::string_view::npos) fail("unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  std::unique_ptr<RawNode> subtree() {
    auto node = std::make_unique<RawNode>();
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (s_[pos_] == '(') {
      ++pos_;
      while (true) {
        auto child = subtree();
        skip();
        if (pos_ < s_.size() && s_[pos_] == ':') {
          ++pos_;
          child->length = number();
          skip();
        }
        node->children.push_back(std::move(child));
        if (pos_ >= s_.size()) fail("unexpected end of input, expected ',' or ')'");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ')') {
          ++pos_;
          break;
        }
        fail(std::string("unexpected '") + s_[pos_] + "'");
      }
      skip();
      node->label = label();  // internal labels are accepted and dropped
      node->label.clear();
    } else {
      node->label = label();
      if (node->label.empty()) fail("expected a leaf label");
    }
    return node;
  }

  std::string label() {
    std::string out;
    if (pos_ < s_.size() && s_[pos_] == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) fail("unterminated quoted label");
        if (s_[pos_] == '\'') {
          if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '\'') {
            out.push_back('\'');
            pos_ += 2;
            continue;
          }
          ++pos_;
          break;
        }
        out.push_back(s_[pos_++]);
      }
      return out;
    }
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == '[' ||
          std::isspace(static_cast<unsigned char>(c)))
        break;
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  double number() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                s_[pos_] == 'e' || s_[pos_] == 'E' || s_[pos_] == '-' || s_[pos_] == '+'))
      ++pos_;
    const std::string token(s_.substr(start, pos_ - start));
    if (token.empty()) fail("expected a branch length");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (...) {
      used = 0;
    }
    if (used != token.size()) {
      pos_ = start;
      fail("malformed branch length '" + token + "'");
    }
    if (v < 0.0) {
      pos_ = start;
      fail("negative branch length");
    }
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

// Builds the unrooted tree from a rooted raw tree, removing unary nodes.
class Builder {
 public:
  Phylogeny build(const RawNode& root) {
    const RawNode* top = &root;
    while (top->children.size() == 1) top = top->children.front().get();
    const std::size_t r = attach(*top);
    collapse_degree_two(r);
    return std::move(tree_);
  }

 private:
  // Returns the node standing for `raw` (leaf or internal).
  std::size_t attach(const RawNode& raw) {
    if (raw.children.empty()) {
      if (!labels_.insert(raw.label).second) throw DomainError("duplicate leaf label " + raw.label);
      return tree_.add_leaf(raw.label);
    }
    const std::size_t v = tree_.add_internal();
    for (const auto& child : raw.children) {
      const std::size_t c = attach(*child);
      tree_.add_edge(v, c, child->length.value_or(kDefaultBranchLength));
    }
    return v;
  }

  // Rebuild without degree-2 internal nodes (and with a unary root pruned).
  void collapse_degree_two(std::size_t root) {
    Phylogeny out;
    std::vector<std::size_t> map(tree_.n_nodes(), static_cast<std::size_t>(-1));
    // Find a start node that is not degree <= 2 internal, if possible.
    std::size_t start = root;
    for (std::size_t v = 0; v < tree_.n_nodes(); ++v)
      if (!tree_.is_leaf(v) && tree_.degree(v) >= 3) {
        start = v;
        break;
      }
    if (!tree_.is_leaf(start) && tree_.degree(start) < 3) {
      // No node of degree >= 3: at most two leaves.
      const auto leaves = tree_.leaves();
      if (leaves.size() == 1) {
        out.add_leaf(tree_.label(leaves[0]));
      } else {
        const auto a = out.add_leaf(tree_.label(leaves[0]));
        const auto b = out.add_leaf(tree_.label(leaves[1]));
        out.add_edge(a, b, path_length(leaves[0], leaves[1]));
      }
      tree_ = std::move(out);
      return;
    }
    if (tree_.is_leaf(start) && tree_.n_nodes() == 1) {
      out.add_leaf(tree_.label(start));
      tree_ = std::move(out);
      return;
    }
    map[start] = tree_.is_leaf(start) ? out.add_leaf(tree_.label(start)) : out.add_internal();
    // DFS: walk through degree-2 nodes summing lengths.
    std::vector<std::size_t> stack{start};
    std::vector<bool> seen(tree_.n_nodes(), false);
    seen[start] = true;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto e : tree_.incident(v)) {
        std::size_t prev = v, cur = tree_.other(e, v);
        if (seen[cur]) continue;
        double length = tree_.edge(e).length;
        std::size_t via = e;
        while (!tree_.is_leaf(cur) && tree_.degree(cur) == 2) {
          seen[cur] = true;
          const auto& inc = tree_.incident(cur);
          const std::size_t next_edge = inc[0] == via ? inc[1] : inc[0];
          prev = cur;
          cur = tree_.other(next_edge, cur);
          via = next_edge;
          length += tree_.edge(next_edge).length;
        }
        (void)prev;
        if (seen[cur]) continue;
        seen[cur] = true;
        map[cur] = tree_.is_leaf(cur) ? out.add_leaf(tree_.label(cur)) : out.add_internal();
        out.add_edge(map[v], map[cur], length);
        if (!tree_.is_leaf(cur)) stack.push_back(cur);
      }
    }
    tree_ = std::move(out);
  }

  double path_length(std::size_t from, std::size_t to) const {
    std::vector<double> dist(tree_.n_nodes(), -1.0);
    std::vector<std::size_t> stack{from};
    dist[from] = 0.0;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (auto e : tree_.incident(v)) {
        const auto w = tree_.other(e, v);
        if (dist[w] < 0.0) {
          dist[w] = dist[v] + tree_.edge(e).length;
          stack.push_back(w);
        }
      }
    }
    return dist[to];
  }

  Phylogeny tree_;
  std::set<std::string> labels_;
};

std::string quote_label(const std::string& label) {
  const bool plain = std::none_of(label.begin(), label.end(), [](unsigned char c) {
    return std::isspace(c) || c == '(' || c == ')' || c == '[' || c == ']' || c == ':' || c == ';' || c == ',' ||
           c == '\'';
  });
  if (plain) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string format_length(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct CanonicalWriter {
  const Phylogeny& tree;
  bool with_lengths;
  std::vector<std::string> min_label;  // smallest leaf label below node (rooted view)

  std::string smallest_below(std::size_t v, std::size_t parent_edge) {
    if (tree.is_leaf(v)) return tree.label(v);
    std::string best;
    for (auto e : tree.incident(v)) {
      if (e == parent_edge) continue;
      auto s = smallest_below(tree.other(e, v), e);
      if (best.empty() || s < best) best = std::move(s);
    }
    return best;
  }

  std::string render(std::size_t v, std::size_t parent_edge) {
    if (tree.is_leaf(v) && parent_edge != static_cast<std::size_t>(-1)) return quote_label(tree.label(v));
    std::vector<std::pair<std::string, std::string>> parts;  // (sort key, text)
    for (auto e : tree.incident(v)) {
      if (e == parent_edge) continue;
      const auto w = tree.other(e, v);
      std::string text = render(w, e);
      if (with_lengths) text += ":" + format_length(tree.edge(e).length);
      parts.emplace_back(smallest_below(w, e), std::move(text));
    }
    std::sort(parts.begin(), parts.end());
    std::string out = "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += ",";
      out += parts[i].second;
    }
    return out + ")";
  }
};

std::string write_impl(const Phylogeny& tree, bool with_lengths) {
  const auto leaves = tree.leaves();
  if (leaves.empty()) throw DomainError("cannot write a tree without leaves");
  if (tree.n_nodes() == 1) return quote_label(tree.label(leaves[0])) + ";";
  if (tree.n_nodes() == 2) {
    const auto& e = tree.edge(0);
    std::string a = quote_label(tree.label(leaves[0])), b = quote_label(tree.label(leaves[1]));
    if (!with_lengths) return "(" + a + "," + b + ");";
    return "(" + a + ":" + format_length(e.length) + "," + b + ":0);";
  }
  const std::size_t first = leaves[0];
  const std::size_t root = tree.other(tree.incident(first).front(), first);
  CanonicalWriter writer{tree, with_lengths, {}};
  return writer.render(root, static_cast<std::size_t>(-1)) + ";";
}

}  // namespace

Phylogeny parse_newick(std::string_view text) {
  NewickParser parser(text);
  const auto raw = parser.parse();
  Builder builder;
  Phylogeny tree = builder.build(*raw);
  tree.validate();
  return tree;
}

std::string write_newick(const Phylogeny& tree) { return write_impl(tree, true); }

std::string topology_string(const Phylogeny& tree) { return write_impl(tree, false); }

std::vector<std::vector<int>> leaf_path_lengths(const Phylogeny& tree) {
  const auto leaves = tree.leaves();
  std::vector<std::vector<int>> out(leaves.size(), std::vector<int>(leaves.size(), 0));
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    std::vector<int> dist(tree.n_nodes(), -1);
    std::queue<std::size_t> queue;
    dist[leaves[i]] = 0;
    queue.push(leaves[i]);
    while (!queue.empty()) {
      const auto v = queue.front();
      queue.pop();
      for (auto e : tree.incident(v)) {
        const auto w = tree.other(e, v);
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
      }
    }
    for (std::size_t j = 0; j < leaves.size(); ++j) out[i][j] = dist[leaves[j]];
  }
  return out;
}

}  // namespace relate
