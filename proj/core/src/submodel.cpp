#include "relate/submodel.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>

#include "relate/error.hpp"

namespace relate {

SquareMatrix multiply(const SquareMatrix& a, const SquareMatrix& b) {
  SquareMatrix out(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t k = 0; k < a.n; ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < a.n; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

std::size_t SubstitutionModel::index_of(char symbol) const {
  const auto pos = states.find(symbol);
  return pos == std::string::npos ? static_cast<std::size_t>(-1) : pos;
}

SquareMatrix SubstitutionModel::rate_matrix() const {
  SquareMatrix q(size());
  for (std::size_t i = 0; i < size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < size(); ++j) {
      if (i == j) continue;
      q(i, j) = mu * freqs[j];
      row += q(i, j);
    }
    q(i, i) = -row;
  }
  return q;
}

namespace {

void check_p_inv(double p_inv) {
  if (!(p_inv >= 0.0 && p_inv < 1.0)) throw DomainError("p_inv must lie in [0, 1), got " + std::to_string(p_inv));
}

}  // namespace

SubstitutionModel make_model(std::string states, std::vector<double> freqs, double p_inv,
                             std::optional<double> gamma_shape, std::size_t n_rate_cats) {
  if (states.empty() || states.size() != freqs.size()) throw DomainError("states and frequencies disagree in size");
  double total = 0.0;
  for (double f : freqs) {
    if (!(f > 0.0)) throw DomainError("state frequencies must be positive");
    total += f;
  }
  SubstitutionModel model;
  model.states = std::move(states);
  model.freqs = std::move(freqs);
  for (double& f : model.freqs) f /= total;
  double sum_sq = 0.0;
  for (double f : model.freqs) sum_sq += f * f;
  // -sum_i pi_i q_ii = mu (1 - sum pi^2) = 1. A single state cannot change.
  model.mu = sum_sq < 1.0 ? 1.0 / (1.0 - sum_sq) : 1.0;
  check_p_inv(p_inv);
  model.p_inv = p_inv;
  return with_gamma(std::move(model), gamma_shape, n_rate_cats);
}

SubstitutionModel with_p_inv(SubstitutionModel model, double p_inv) {
  check_p_inv(p_inv);
  model.p_inv = p_inv;
  return model;
}

SubstitutionModel with_gamma(SubstitutionModel model, std::optional<double> shape, std::size_t n_rate_cats) {
  if (shape) {
    model.gamma_shape = shape;
    model.rates = gamma_categories(*shape, n_rate_cats);
  } else {
    model.gamma_shape.reset();
    model.rates = {1.0};
  }
  return model;
}

SubstitutionModel build_model(const CharacterMatrix& matrix, const ModelOptions& options) {
  if (matrix.n_taxa() == 0 || matrix.n_sites() == 0) throw DomainError("cannot build a model from an empty matrix");
  check_p_inv(options.p_inv);
  if (options.gamma_shape && !(*options.gamma_shape > 0.0)) throw DomainError("gamma shape must be positive");
  if (options.pseudocount < 0.0) throw DomainError("pseudocount must be non-negative");

  std::vector<double> counts(options.states.size(), 0.0);
  for (const auto& row : matrix.rows)
    for (char c : row) {
      if (c == kGap) continue;
      const auto pos = options.states.find(c);
      if (pos == std::string::npos) throw DomainError(std::string("matrix symbol '") + c + "' is not a model state");
      counts[pos] += 1.0;
    }

  std::string states = options.states;
  if (options.restrict_to_observed) {
    std::string kept;
    std::vector<double> kept_counts;
    for (std::size_t i = 0; i < states.size(); ++i)
      if (counts[i] > 0.0) {
        kept.push_back(states[i]);
        kept_counts.push_back(counts[i]);
      }
    states = std::move(kept);
    counts = std::move(kept_counts);
    if (states.empty()) throw DomainError("matrix has no observed states");
  }

  std::vector<double> freqs(states.size());
  if (options.equal_freqs) {
    std::fill(freqs.begin(), freqs.end(), 1.0 / static_cast<double>(states.size()));
  } else {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double denom = total + static_cast<double>(states.size()) * options.pseudocount;
    if (!(denom > 0.0)) throw DomainError("matrix has no observed states and no pseudocount");
    for (std::size_t i = 0; i < states.size(); ++i) freqs[i] = (counts[i] + options.pseudocount) / denom;
    for (double f : freqs)
      if (!(f > 0.0)) throw DomainError("zero state frequency; use a positive pseudocount or restrict_to_observed");
  }
  return make_model(std::move(states), std::move(freqs), options.p_inv, options.gamma_shape, options.n_rate_cats);
}

SquareMatrix transition_prob(const SubstitutionModel& model, double t, double rate) {
  if (!(t >= 0.0)) throw DomainError("branch length must be non-negative");
  const std::size_t n = model.size();
  const double e = std::exp(-model.mu * rate * t);
  SquareMatrix p(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = model.freqs[j] * (1.0 - e) + (i == j ? e : 0.0);
  return p;
}

std::vector<double> gamma_categories(double alpha, std::size_t n_categories) {
  if (!(alpha > 0.0)) throw DomainError("gamma shape must be positive");
  if (n_categories < 1) throw DomainError("need at least one rate category");
  if (n_categories == 1) return {1.0};
  namespace bm = boost::math;
  // Gamma(alpha, scale 1/alpha): quantiles q_k; the mean over a bin uses
  // the identity x f(x; alpha) = f(x; alpha + 1) * (scale * alpha).
  const double R = static_cast<double>(n_categories);
  std::vector<double> upper_cdf(n_categories + 1, 0.0);
  upper_cdf[n_categories] = 1.0;
  for (std::size_t k = 1; k < n_categories; ++k) {
    const double q = bm::gamma_p_inv(alpha, static_cast<double>(k) / R);  // in units of x*alpha
    upper_cdf[k] = bm::gamma_p(alpha + 1.0, q);
  }
  std::vector<double> rates(n_categories);
  for (std::size_t k = 0; k < n_categories; ++k) rates[k] = R * (upper_cdf[k + 1] - upper_cdf[k]);
  // Remove rounding drift so the mean is exactly 1.
  const double mean = std::accumulate(rates.begin(), rates.end(), 0.0) / R;
  for (double& r : rates) r /= mean;
  return rates;
}

}  // namespace relate
