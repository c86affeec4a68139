#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relate {

inline constexpr double kMinBranchLength = 1e-6;
inline constexpr double kMaxBranchLength = 10.0;
inline constexpr double kDefaultBranchLength = 0.05;

// Unrooted tree stored as an adjacency list over undirected edges. Leaves
// carry labels; internal nodes are unlabelled. Degree-2 nodes never occur.
// Multifurcations are allowed; search code requires is_binary().
class Phylogeny {
 public:
  struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
    double length = 0.0;
  };

  std::size_t add_leaf(std::string label);
  std::size_t add_internal();
  std::size_t add_edge(std::size_t a, std::size_t b, double length);

  std::size_t n_nodes() const { return adjacency_.size(); }
  std::size_t n_edges() const { return edges_.size(); }
  std::size_t n_leaves() const;

  bool is_leaf(std::size_t node) const { return !labels_[node].empty(); }
  const std::string& label(std::size_t node) const { return labels_[node]; }
  std::size_t degree(std::size_t node) const { return adjacency_[node].size(); }
  // Incident edge ids of a node.
  const std::vector<std::size_t>& incident(std::size_t node) const { return adjacency_[node]; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t other(std::size_t e, std::size_t node) const {
    return edges_[e].a == node ? edges_[e].b : edges_[e].a;
  }

  void set_length(std::size_t e, double length) { edges_[e].length = length; }

  // Leaf node ids in ascending label order.
  std::vector<std::size_t> leaves() const;
  std::vector<std::string> leaf_labels() const;  // sorted
  // Throws LookupError for an unknown label.
  std::size_t leaf_node(std::string_view label) const;

  // Internal nodes degree 3 and leaves degree 1 (or a lone leaf).
  bool is_binary() const;
  // Connected and acyclic with unique labels; throws DomainError otherwise.
  void validate() const;

  // Edges whose both ends are internal.
  std::vector<std::size_t> internal_edges() const;

  // Nearest-neighbour interchange across internal edge `e`: the subtree
  // behind the `which`-th (0 or 1) other edge at end b is swapped with the
  // first other edge at end a. Returns false if e is not internal.
  bool nni(std::size_t e, int which);

  // Node to use as the canonical virtual root: the first internal node, or
  // node 0 when there is none.
  std::size_t virtual_root() const;

  // Edge ids in DFS pre-order from the virtual root.
  std::vector<std::size_t> edge_preorder() const;

 private:
  void replace_endpoint(std::size_t e, std::size_t from, std::size_t to);

  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
};

// Newick with quoted or unquoted labels, optional branch lengths and
// [comments]. Missing lengths default to kDefaultBranchLength. Degree-2
// nodes (including a bifurcating root) are removed by fusing their two
// edges. Throws NewickError with the byte position, or DomainError for
// duplicate labels.
Phylogeny parse_newick(std::string_view text);

// Canonical form: rooted at the neighbour of the smallest leaf label,
// children ordered by their smallest leaf label, lengths with 10
// significant digits. Isomorphic trees produce identical strings.
std::string write_newick(const Phylogeny& tree);

// Same as write_newick but without branch lengths; equal strings mean equal
// unrooted topologies.
std::string topology_string(const Phylogeny& tree);

// Number of edges on the path between every pair of leaves, keyed by leaf
// node id pairs through the returned matrix indexed by position in leaves().
std::vector<std::vector<int>> leaf_path_lengths(const Phylogeny& tree);

}  // namespace relate
