#include "relate/bootsim.hpp"

#include <algorithm>
#include <cmath>

#include "relate/error.hpp"
#include "relate/random.hpp"
#include "relate/soundclass.hpp"

namespace relate {
namespace {

struct Step {
  std::size_t parent;
  std::size_t child;
  std::size_t edge;
};

// Parent-before-child edge order from the virtual root.
std::vector<Step> descent_order(const Phylogeny& tree) {
  std::vector<Step> order;
  if (tree.n_nodes() == 0) return order;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{tree.virtual_root(), SIZE_MAX}};
  while (!stack.empty()) {
    const auto [node, via] = stack.back();
    stack.pop_back();
    const auto& inc = tree.incident(node);
    for (auto it = inc.rbegin(); it != inc.rend(); ++it) {
      if (*it == via) continue;
      const std::size_t child = tree.other(*it, node);
      order.push_back({node, child, *it});
      stack.emplace_back(child, *it);
    }
  }
  // The stack pops children in reverse, which is still parent-first.
  return order;
}

}  // namespace

CharacterMatrix simulate_matrix(const MlFit& fit, const CharacterMatrix& tmpl, const SimConfig& cfg) {
  tmpl.validate();
  const Phylogeny& tree = fit.tree;
  const SubstitutionModel& model = fit.model;
  if (tree.n_leaves() != tmpl.n_taxa()) throw DomainError("tree and template have different taxa");
  std::vector<std::size_t> row_of_node(tree.n_nodes(), SIZE_MAX);
  for (std::size_t i = 0; i < tmpl.n_taxa(); ++i) row_of_node[tree.leaf_node(tmpl.taxa[i])] = i;

  const std::size_t n_sites = cfg.n_sites.value_or(tmpl.n_sites());
  if (n_sites == 0) throw DomainError("n_sites must be at least 1");
  if (cfg.retain_gap_mask && n_sites != tmpl.n_sites())
    throw DomainError("the gap mask needs n_sites equal to the template width");

  const std::size_t k = model.size();
  const auto order = descent_order(tree);
  // Transition matrices per (edge, rate category).
  std::vector<std::vector<SquareMatrix>> p(tree.n_edges());
  for (std::size_t e = 0; e < tree.n_edges(); ++e)
    for (double rate : model.rates) p[e].push_back(transition_prob(model, tree.edge(e).length, rate));

  CharacterMatrix out;
  out.taxa = tmpl.taxa;
  out.rows.assign(tmpl.n_taxa(), std::string(n_sites, kGap));
  if (n_sites == tmpl.n_sites()) out.concept_bounds = tmpl.concept_bounds;

  std::vector<std::size_t> state(tree.n_nodes());
  std::vector<double> row(k);
  for (std::size_t s = 0; s < n_sites; ++s) {
    Rng rng(cfg.seed, s);
    if (rng.uniform() < model.p_inv) {
      const char c = model.states[rng.categorical(model.freqs)];
      for (auto& r : out.rows) r[s] = c;
      continue;
    }
    const std::size_t cat = model.n_rate_cats() > 1 ? rng.below(model.n_rate_cats()) : 0;
    state[tree.virtual_root()] = rng.categorical(model.freqs);
    for (const auto& step : order) {
      const SquareMatrix& m = p[step.edge][cat];
      const std::size_t from = state[step.parent];
      for (std::size_t j = 0; j < k; ++j) row[j] = m(from, j);
      state[step.child] = rng.categorical(row);
    }
    for (std::size_t node = 0; node < tree.n_nodes(); ++node)
      if (row_of_node[node] != SIZE_MAX) out.rows[row_of_node[node]][s] = model.states[state[node]];
  }
  if (cfg.retain_gap_mask) out = apply_gap_mask(std::move(out), tmpl);
  return out;
}

CharacterMatrix apply_gap_mask(CharacterMatrix sim, const CharacterMatrix& tmpl) {
  if (sim.taxa != tmpl.taxa || sim.n_sites() != tmpl.n_sites())
    throw DomainError("gap mask needs matching taxa and width");
  for (std::size_t i = 0; i < sim.n_taxa(); ++i)
    for (std::size_t s = 0; s < sim.n_sites(); ++s)
      if (tmpl.rows[i][s] == kGap) sim.rows[i][s] = kGap;
  return sim;
}

}  // namespace relate
