#include <boost/math/distributions/chi_squared.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "relate/bootsim.hpp"
#include "relate/error.hpp"

using namespace relate;

namespace {

CharacterMatrix blank(const std::vector<std::string>& taxa, std::size_t sites, char fill = 'P') {
  CharacterMatrix m;
  m.taxa = taxa;
  m.rows.assign(taxa.size(), std::string(sites, fill));
  return m;
}

MlFit fit_of(Phylogeny tree, SubstitutionModel model) {
  MlFit f;
  f.tree = std::move(tree);
  f.model = std::move(model);
  return f;
}

const SubstitutionModel kModel = make_model("PTKR", {0.1, 0.2, 0.3, 0.4});

}  // namespace

TEST_CASE("forced invariant sites are constant") {
  const auto fit = fit_of(parse_newick("((A:1,B:1):1,C:1,D:1);"), with_p_inv(kModel, 0.999999999999));
  SimConfig cfg;
  cfg.retain_gap_mask = false;
  const auto m = simulate_matrix(fit, blank({"A", "B", "C", "D"}, 500), cfg);
  for (std::size_t s = 0; s < 500; ++s)
    for (std::size_t i = 1; i < 4; ++i) CHECK(m.at(i, s) == m.at(0, s));
}

TEST_CASE("zero branch lengths give constant sites") {
  const auto fit = fit_of(parse_newick("((A:0,B:0):0,C:0,D:0);"), kModel);
  SimConfig cfg;
  cfg.retain_gap_mask = false;
  const auto m = simulate_matrix(fit, blank({"A", "B", "C", "D"}, 300), cfg);
  for (std::size_t s = 0; s < 300; ++s)
    for (std::size_t i = 1; i < 4; ++i) CHECK(m.at(i, s) == m.at(0, s));
}

TEST_CASE("single-edge mismatch rate and pair frequencies") {
  const double t = 0.4;
  const auto fit = fit_of(parse_newick("(A:0.4,B:0);"), kModel);
  SimConfig cfg;
  cfg.retain_gap_mask = false;
  cfg.seed = 99;
  const std::size_t n = 100000;
  const auto m = simulate_matrix(fit, blank({"A", "B"}, n), cfg);
  const auto p = transition_prob(kModel, t);
  double expected_same = 0.0;
  for (std::size_t i = 0; i < 4; ++i) expected_same += kModel.freqs[i] * p(i, i);
  const double expected = 1.0 - expected_same;
  std::size_t mism = 0;
  std::vector<std::vector<double>> joint(4, std::vector<double>(4, 0.0));
  for (std::size_t s = 0; s < n; ++s) {
    mism += m.at(0, s) != m.at(1, s);
    joint[kModel.index_of(m.at(0, s))][kModel.index_of(m.at(1, s))] += 1.0;
  }
  const double se = std::sqrt(expected * (1 - expected) / n);
  CHECK(std::abs(static_cast<double>(mism) / n - expected) < 3 * se);
  // The joint law pi_a P_ab(t) is symmetric, so the root side is irrelevant.
  double chi2 = 0.0;
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      const double e = n * kModel.freqs[a] * p(a, b);
      chi2 += (joint[a][b] - e) * (joint[a][b] - e) / e;
    }
  boost::math::chi_squared dist(15);
  CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
}

TEST_CASE("stationary marginals at every leaf") {
  Rng rng(4);
  const auto taxa = oracle::labels(5);
  const auto fit = fit_of(oracle::random_tree(taxa, rng, 0.5), with_gamma(with_p_inv(kModel, 0.1), 0.7, 2));
  SimConfig cfg;
  cfg.retain_gap_mask = false;
  const std::size_t n = 100000;
  const auto m = simulate_matrix(fit, blank(taxa, n), cfg);
  boost::math::chi_squared dist(3);
  for (std::size_t i = 0; i < taxa.size(); ++i) {
    std::vector<double> count(4, 0.0);
    for (char c : m.rows[i]) count[kModel.index_of(c)] += 1.0;
    double chi2 = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double e = n * kModel.freqs[k];
      chi2 += (count[k] - e) * (count[k] - e) / e;
    }
    CHECK(boost::math::cdf(boost::math::complement(dist, chi2)) > 0.001);
  }
}

TEST_CASE("gap mask and determinism") {
  const auto fit = fit_of(parse_newick("((A:0.3,B:0.1):0.2,C:0.4);"), kModel);
  CharacterMatrix tmpl = blank({"A", "B", "C"}, 8);
  tmpl.rows = {"P-TK--RP", "--------", "PTKRPTKR"};
  tmpl.concept_bounds = {{"x", 0, 3}, {"y", 3, 8}};
  const auto m = simulate_matrix(fit, tmpl, {});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t s = 0; s < 8; ++s) CHECK((m.at(i, s) == kGap) == (tmpl.at(i, s) == kGap));
  CHECK(m.concept_bounds == tmpl.concept_bounds);
  CHECK(simulate_matrix(fit, tmpl, {}) == m);
  SimConfig other;
  other.seed = 43;
  CHECK_FALSE(simulate_matrix(fit, blank({"A", "B", "C"}, 200), other) ==
              simulate_matrix(fit, blank({"A", "B", "C"}, 200), {}));
}

TEST_CASE("apply_gap_mask") {
  CharacterMatrix sim = blank({"A", "B"}, 4, 'K');
  CHECK(apply_gap_mask(sim, blank({"A", "B"}, 4, '-')).rows == std::vector<std::string>{"----", "----"});
  CHECK(apply_gap_mask(sim, blank({"A", "B"}, 4, 'R')) == sim);
  CharacterMatrix mixed = blank({"A", "B"}, 4, 'R');
  mixed.rows = {"R-R-", "--RR"};
  CHECK(apply_gap_mask(sim, mixed).rows == std::vector<std::string>{"K-K-", "--KK"});
  CHECK_THROWS_AS(apply_gap_mask(sim, blank({"A", "B"}, 5)), DomainError);
  CHECK_THROWS_AS(apply_gap_mask(sim, blank({"A", "C"}, 4)), DomainError);
}

TEST_CASE("simulate errors") {
  const auto fit = fit_of(parse_newick("(A:0.3,B:0.1,C:0.4);"), kModel);
  CHECK_THROWS_AS(simulate_matrix(fit, blank({"A", "B"}, 4), {}), DomainError);
  CHECK_THROWS_AS(simulate_matrix(fit, blank({"A", "B", "X"}, 4), {}), LookupError);
  SimConfig zero;
  zero.retain_gap_mask = false;
  zero.n_sites = 0;
  CHECK_THROWS_AS(simulate_matrix(fit, blank({"A", "B", "C"}, 4), zero), DomainError);
  SimConfig wide;
  wide.n_sites = 9;
  CHECK_THROWS_AS(simulate_matrix(fit, blank({"A", "B", "C"}, 4), wide), DomainError);
}
