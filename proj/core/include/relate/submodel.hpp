#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relate/msa.hpp"

namespace relate {

// Row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), data(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
};

SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b);

// Equal-rates substitution model with target-frequency weighting
// q_ij = mu * pi_j, mixed with a proportion of invariant sites and an
// optional discrete gamma over the variable sites.
struct SubstitutionModel {
  std::string states;          // state symbols, index order of freqs
  std::vector<double> freqs;   // stationary frequencies, sum to 1
  double mu = 1.0;             // set so that one unit of branch length = one expected substitution
  double p_inv = 0.0;          // in [0, 1)
  std::optional<double> gamma_shape;
  std::vector<double> rates{1.0};  // category multipliers, mean 1

  std::size_t size() const { return states.size(); }
  std::size_t n_rate_cats() const { return rates.size(); }
  // Index of a state symbol, or npos for gaps and unknown symbols.
  std::size_t index_of(char symbol) const;

  SquareMatrix rate_matrix() const;
};

struct ModelOptions {
  double p_inv = 0.0;
  std::optional<double> gamma_shape;
  std::size_t n_rate_cats = 2;  // used only when gamma_shape is set
  double pseudocount = 0.5;
  bool equal_freqs = false;
  bool restrict_to_observed = false;  // drop states that never occur
  std::string states = "PTSKMNRWJH";
};

// Throws DomainError for p_inv outside [0,1), gamma_shape <= 0, an empty
// matrix, or a matrix symbol that is not a state.
SubstitutionModel build_model(const CharacterMatrix& matrix, const ModelOptions& options = {});

// Model with explicit frequencies (normalised internally).
SubstitutionModel make_model(std::string states, std::vector<double> freqs, double p_inv = 0.0,
                             std::optional<double> gamma_shape = std::nullopt, std::size_t n_rate_cats = 2);

// Returns a copy with a new invariant proportion and/or gamma shape.
SubstitutionModel with_p_inv(SubstitutionModel model, double p_inv);
SubstitutionModel with_gamma(SubstitutionModel model, std::optional<double> shape, std::size_t n_rate_cats = 2);

// Closed form: p_ii = pi_i + (1 - pi_i) e^{-mu r t}, p_ij = pi_j (1 - e^{-mu r t}).
// Throws DomainError for negative t.
SquareMatrix transition_prob(const SubstitutionModel& model, double t, double rate = 1.0);

// Equal-probability bins of Gamma(alpha, 1/alpha), each represented by its
// conditional mean. Throws DomainError for alpha <= 0 or R < 1.
std::vector<double> gamma_categories(double alpha, std::size_t n_categories);

}  // namespace relate
