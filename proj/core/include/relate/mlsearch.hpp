#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "relate/likelihood.hpp"
#include "relate/msa.hpp"
#include "relate/submodel.hpp"
#include "relate/tree.hpp"

namespace relate {

struct SearchConfig {
  std::uint64_t seed = 42;
  int max_nni_rounds = 200;
  double bl_tolerance = 1e-6;
  double ll_tolerance = 1e-4;
  int random_restarts = 1;
  int max_bl_sweeps = 50;
};

struct TraceEntry {
  int round = 0;
  double log_likelihood = 0.0;
};

struct MlFit {
  Phylogeny tree;
  SubstitutionModel model;
  double log_likelihood = 0.0;
  std::vector<TraceEntry> search_trace;
};

// Model-based distance between two rows, clamped to kMaxBranchLength when
// the log is undefined or the rows share no sites. `shared` receives the
// number of sites where both rows have data.
double model_distance(const std::string& a, const std::string& b, double heterozygosity,
                      std::size_t* shared = nullptr);

// Neighbour joining over a symmetric distance matrix; exact ties among the
// best pairs are broken with the seeded generator.
Phylogeny neighbor_joining(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& dist,
                           std::uint64_t seed);

// Neighbour-joining start tree on model distances. Needs at least two taxa.
Phylogeny init_tree(const CharacterMatrix& matrix, const SubstitutionModel& model, std::uint64_t seed);

// Edge-by-edge sweeps until a sweep gains less than ll_tolerance.
Phylogeny optimize_branch_lengths(const Phylogeny& tree, const SubstitutionModel& model,
                                  const CharacterMatrix& matrix, const SearchConfig& cfg);
// In-place variant on an engine; returns the final log-likelihood.
double optimize_branch_lengths(LikelihoodEngine& engine, const SearchConfig& cfg);

// NNI hill climbing; trees with fewer than four leaves only get their
// branch lengths optimised.
MlFit nni_search(const Phylogeny& start, const SubstitutionModel& model, const CharacterMatrix& matrix,
                 const SearchConfig& cfg);

struct MlOptions {
  ModelOptions model;           // model.p_inv is the fixed proportion
  bool estimate_p_inv = false;  // search p_inv in [0, 0.5] instead
  bool estimate_gamma = false;  // search the gamma shape (needs model.gamma_shape as a start)
};

// Best fit over cfg.random_restarts starts seeded cfg.seed, cfg.seed + 1, ...
MlFit ml_tree(const CharacterMatrix& matrix, const MlOptions& options, const SearchConfig& cfg);
// Fixed-p_inv shorthand.
MlFit ml_tree(const CharacterMatrix& matrix, double p_inv, const SearchConfig& cfg);

}  // namespace relate
