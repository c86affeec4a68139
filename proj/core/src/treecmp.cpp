#include "relate/treecmp.hpp"

#include <algorithm>

#include "relate/error.hpp"

namespace relate {
namespace {

using PathMatrix = std::vector<std::vector<int>>;

Quartet classify(const PathMatrix& d, std::size_t a, std::size_t b, std::size_t c, std::size_t e) {
  const int s1 = d[a][b] + d[c][e];
  const int s2 = d[a][c] + d[b][e];
  const int s3 = d[a][e] + d[b][c];
  if (s1 < s2 && s1 < s3) return Quartet::AB_CD;
  if (s2 < s1 && s2 < s3) return Quartet::AC_BD;
  if (s3 < s1 && s3 < s2) return Quartet::AD_BC;
  return Quartet::Star;
}

}  // namespace

std::string to_string(Quartet q) {
  switch (q) {
    case Quartet::AB_CD: return "AB|CD";
    case Quartet::AC_BD: return "AC|BD";
    case Quartet::AD_BC: return "AD|BC";
    case Quartet::Star: return "STAR";
  }
  return "?";
}

Quartet quartet_topology(const Phylogeny& tree, const std::array<std::string_view, 4>& leaves) {
  const auto order = tree.leaves();
  std::array<std::size_t, 4> pos{};
  for (int i = 0; i < 4; ++i) {
    const std::size_t node = tree.leaf_node(leaves[i]);
    pos[i] = static_cast<std::size_t>(std::find(order.begin(), order.end(), node) - order.begin());
  }
  const PathMatrix d = leaf_path_lengths(tree);
  return classify(d, pos[0], pos[1], pos[2], pos[3]);
}

QuartetScore gqd(const Phylogeny& predicted, const Phylogeny& gold) {
  const auto labels_p = predicted.leaf_labels();
  const auto labels_g = gold.leaf_labels();
  if (labels_p != labels_g) {
    std::vector<std::string> only_p, only_g;
    std::set_difference(labels_p.begin(), labels_p.end(), labels_g.begin(), labels_g.end(),
                        std::back_inserter(only_p));
    std::set_difference(labels_g.begin(), labels_g.end(), labels_p.begin(), labels_p.end(),
                        std::back_inserter(only_g));
    std::string msg = "leaf sets differ;";
    if (!only_p.empty()) msg += " only in predicted:";
    for (const auto& l : only_p) msg += " " + l;
    if (!only_g.empty()) msg += " only in gold:";
    for (const auto& l : only_g) msg += " " + l;
    throw DomainError(msg);
  }
  // Both leaves() lists are sorted by label, so positions line up.
  const PathMatrix dp = leaf_path_lengths(predicted);
  const PathMatrix dg = leaf_path_lengths(gold);
  const std::size_t n = labels_p.size();
  QuartetScore score;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c)
        for (std::size_t e = c + 1; e < n; ++e) {
          const Quartet g = classify(dg, a, b, c, e);
          if (g == Quartet::Star) continue;
          ++score.resolved_gold;
          if (classify(dp, a, b, c, e) != g) ++score.differing;
        }
  if (score.resolved_gold == 0) {
    score.no_resolved_quartets = true;
    score.gqd = 0.0;
  } else {
    score.gqd = static_cast<double>(score.differing) / static_cast<double>(score.resolved_gold);
  }
  return score;
}

}  // namespace relate
