#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "relate/msa.hpp"
#include "relate/submodel.hpp"
#include "relate/tree.hpp"

namespace relate {

struct LikelihoodResult {
  double total_log_likelihood = 0.0;
  std::vector<double> per_site_log_likelihoods;
};

// Alignment columns collapsed into unique patterns. States are indices into
// the model's state string; kMissing marks gaps.
struct SitePatterns {
  static constexpr std::uint16_t kMissing = 0xFFFF;

  std::size_t n_taxa = 0;
  std::vector<std::uint16_t> states;  // pattern-major: states[p * n_taxa + taxon]
  std::vector<double> weights;        // occurrences of each pattern
  std::vector<std::size_t> site_pattern;
  // Invariant-site likelihood term: pi_c when every observed state is c,
  // 1 for an all-gap column, 0 otherwise.
  std::vector<double> invariant_term;

  std::size_t size() const { return weights.size(); }
  std::uint16_t state(std::size_t pattern, std::size_t taxon) const { return states[pattern * n_taxa + taxon]; }
};

// Throws DomainError when a matrix symbol is not a model state.
SitePatterns compress_sites(const CharacterMatrix& matrix, const SubstitutionModel& model);

// Felsenstein pruning under the invariant-site / discrete-gamma mixture.
//
// Partial likelihoods are kept per directed edge and recomputed lazily, so
// changing one branch or applying an NNI only touches the partials that
// depend on it. Partials are rescaled by 2^256 whenever their largest entry
// drops below 2^-256.
class LikelihoodEngine {
 public:
  // Throws DomainError if the tree leaves and matrix taxa differ.
  LikelihoodEngine(Phylogeny tree, SubstitutionModel model, const CharacterMatrix& matrix);

  const Phylogeny& tree() const { return tree_; }
  const SubstitutionModel& model() const { return model_; }
  const SitePatterns& patterns() const { return patterns_; }

  double log_likelihood();
  // Evaluated across a chosen edge; the value does not depend on the edge.
  double log_likelihood_at(std::size_t edge);
  LikelihoodResult evaluate();

  void set_branch_length(std::size_t edge, double length);
  // Golden/Brent search over [kMinBranchLength, kMaxBranchLength] on a log
  // scale. Never lowers the likelihood; returns the new log-likelihood.
  double optimize_branch(std::size_t edge, double tolerance);

  // Applies Phylogeny::nni and invalidates the affected partials.
  bool apply_nni(std::size_t edge, int which);
  // Puts back a tree that differs from the current one only in the edges
  // touching `edge` (a saved copy taken before apply_nni and local branch
  // changes around it).
  void restore_near(std::size_t edge, const Phylogeny& saved);

  void set_model(SubstitutionModel model);
  void set_tree(Phylogeny tree);

  // Partial-likelihood vector at `node` for one site and rate category,
  // combining every incident subtree (unscaled).
  std::vector<double> root_vector(std::size_t site, std::size_t category, std::size_t node);

 private:
  struct Partial {
    std::vector<double> values;      // pattern-major: [pattern][category][state]
    std::vector<std::int32_t> scale; // [pattern][category]
    bool valid = false;
  };

  std::size_t directed(std::size_t edge, std::size_t from) const {
    return 2 * edge + (tree_.edge(edge).a == from ? 0 : 1);
  }
  const Partial& partial(std::size_t edge, std::size_t from);
  void compute(Partial& out, std::size_t edge, std::size_t from);
  void invalidate_away(std::size_t edge);
  void invalidate_all();
  void bind_leaves(const CharacterMatrix* matrix);

  // Per-pattern log-likelihood across `edge` given precomputed sums.
  double edge_log_likelihood(std::size_t edge, double length, std::vector<double>* per_pattern);
  void prepare_edge_sums(std::size_t edge);

  Phylogeny tree_;
  SubstitutionModel model_;
  SitePatterns patterns_;
  std::vector<std::size_t> leaf_taxon_;  // node -> matrix row (npos for internal)
  std::vector<Partial> partials_;
  // Per-edge evaluation scratch: A = sum pi a b, B = (pi.a)(pi.b), S = scale.
  std::vector<double> sum_a_, sum_b_;
  std::vector<std::int32_t> sum_scale_;
};

// Convenience wrapper: builds an engine and evaluates once. Throws
// NumericalError when a site likelihood is zero or non-finite.
LikelihoodResult total_log_likelihood(const Phylogeny& tree, const SubstitutionModel& model,
                                      const CharacterMatrix& matrix);

// Root partial vector at the virtual root for one site and rate multiplier.
std::vector<double> site_conditionals(const Phylogeny& tree, const SubstitutionModel& model,
                                      const CharacterMatrix& matrix, std::size_t site, double rate);

}  // namespace relate
