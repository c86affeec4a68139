#pragma once

#include <cstdint>
#include <optional>

#include "relate/mlsearch.hpp"
#include "relate/msa.hpp"

namespace relate {

struct SimConfig {
  std::uint64_t seed = 42;
  bool retain_gap_mask = true;
  std::optional<std::size_t> n_sites;  // template width when unset
};

// One replicate from a fitted model and tree. Each site draws from its own
// substream, so the output does not depend on evaluation order. Invariant
// sites take a single class drawn from pi; variable sites start from pi at
// the virtual root and evolve edge by edge. Throws DomainError when tree
// leaves and template taxa differ, or when n_sites is 0 or (with the gap
// mask on) differs from the template width.
CharacterMatrix simulate_matrix(const MlFit& fit, const CharacterMatrix& tmpl, const SimConfig& cfg = {});

// Copies template gaps onto a simulated matrix of the same shape.
CharacterMatrix apply_gap_mask(CharacterMatrix sim, const CharacterMatrix& tmpl);

}  // namespace relate
