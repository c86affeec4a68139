#pragma once

#include <array>
#include <string>
#include <string_view>

#include "relate/tree.hpp"

namespace relate {

// Split of four leaves given in order (a, b, c, d).
enum class Quartet { AB_CD, AC_BD, AD_BC, Star };
std::string to_string(Quartet q);

// Induced topology from the four-point condition on edge counts. Throws
// LookupError for an unknown leaf.
Quartet quartet_topology(const Phylogeny& tree, const std::array<std::string_view, 4>& leaves);

struct QuartetScore {
  std::size_t resolved_gold = 0;  // bq
  std::size_t differing = 0;      // dq
  double gqd = 0.0;
  bool no_resolved_quartets = false;
};

// Generalized quartet distance over all C(n, 4) quartets. Gold trees may
// be multifurcating. Throws DomainError listing labels found in only one tree.
QuartetScore gqd(const Phylogeny& predicted, const Phylogeny& gold);

}  // namespace relate
