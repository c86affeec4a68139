#include "doctest.h"
#include "oracles.hpp"
#include "relate/bootsim.hpp"
#include "relate/error.hpp"
#include "relate/log.hpp"
#include "relate/mlsearch.hpp"
#include "relate/treecmp.hpp"

using namespace relate;

namespace {

CharacterMatrix simulate(const Phylogeny& tree, const SubstitutionModel& model, std::size_t sites,
                         std::uint64_t seed) {
  CharacterMatrix tmpl;
  tmpl.taxa = tree.leaf_labels();
  tmpl.rows.assign(tmpl.taxa.size(), std::string(sites, 'P'));
  MlFit fit;
  fit.tree = tree;
  fit.model = model;
  SimConfig cfg;
  cfg.seed = seed;
  cfg.retain_gap_mask = false;
  return simulate_matrix(fit, tmpl, cfg);
}

SubstitutionModel uniform10(double p_inv = 0.0) {
  return make_model(std::string(kDolgoClasses), std::vector<double>(10, 1.0), p_inv);
}

}  // namespace

TEST_CASE("model_distance") {
  const double h = 0.9;
  std::size_t shared = 0;
  CHECK(model_distance("KKKK", "KKKK", h, &shared) == 0.0);
  CHECK(shared == 4);
  CHECK(model_distance("KR--", "KS--", h, &shared) == doctest::Approx(-h * std::log(1 - 0.5 / h)));
  CHECK(shared == 2);
  CHECK(model_distance("K-", "-K", h, &shared) == kMaxBranchLength);
  CHECK(shared == 0);
  CHECK(model_distance("KR", "SP", h) == kMaxBranchLength);
}

TEST_CASE("neighbor_joining") {
  SUBCASE("three taxa") {
    const auto t = neighbor_joining({"A", "B", "C"}, {{0, 3, 4}, {3, 0, 5}, {4, 5, 0}}, 1);
    CHECK(t.n_leaves() == 3);
    CHECK(t.n_edges() == 3);
    CHECK(t.edge(t.incident(t.leaf_node("A")).front()).length == doctest::Approx(1.0));
    CHECK(t.edge(t.incident(t.leaf_node("C")).front()).length == doctest::Approx(3.0));
  }
  SUBCASE("additive five-taxon matrix recovers the tree") {
    const Phylogeny truth = parse_newick("((A:0.1,B:0.2):0.3,C:0.25,(D:0.15,E:0.05):0.4);");
    const auto labels = truth.leaf_labels();
    // Path lengths in branch-length units by walking the tree.
    std::vector<std::vector<double>> d(5, std::vector<double>(5, 0.0));
    for (std::size_t i = 0; i < 5; ++i) {
      std::vector<double> dist(truth.n_nodes(), -1);
      std::vector<std::size_t> stack{truth.leaf_node(labels[i])};
      dist[stack.back()] = 0;
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        for (auto e : truth.incident(v)) {
          const auto w = truth.other(e, v);
          if (dist[w] < 0) {
            dist[w] = dist[v] + truth.edge(e).length;
            stack.push_back(w);
          }
        }
      }
      for (std::size_t j = 0; j < 5; ++j) d[i][j] = dist[truth.leaf_node(labels[j])];
    }
    const auto t = neighbor_joining(labels, d, 7);
    CHECK(topology_string(t) == topology_string(truth));
    CHECK(write_newick(t) == write_newick(truth));
  }
  SUBCASE("identical rows join with near-zero limbs") {
    CharacterMatrix m;
    m.taxa = {"A", "B", "C", "D"};
    m.rows = {"KRSPTKRSPT", "KRSPTKRSPT", "PPSKTKRMMT", "PTSKMNRMJH"};
    const auto t = init_tree(m, build_model(m), 3);
    CHECK(t.edge(t.incident(t.leaf_node("A")).front()).length <= 1e-6);
    CHECK(t.edge(t.incident(t.leaf_node("B")).front()).length <= 1e-6);
  }
}

TEST_CASE("init_tree warns when a pair shares no sites") {
  CharacterMatrix m;
  m.taxa = {"A", "B", "C"};
  m.rows = {"KR--", "--KR", "KRKR"};
  std::vector<std::string> warnings;
  auto previous = set_warning_sink([&](const std::string& w) { warnings.push_back(w); });
  const auto t = init_tree(m, build_model(m), 1);
  set_warning_sink(previous);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("A and B") != std::string::npos);
  CHECK(t.n_leaves() == 3);
  CharacterMatrix one;
  one.taxa = {"A"};
  one.rows = {"K"};
  CHECK_THROWS_AS(init_tree(one, build_model(one), 1), DomainError);
}

TEST_CASE("optimize_branch_lengths on two sequences") {
  const auto model = uniform10();
  CharacterMatrix same;
  same.taxa = {"A", "B"};
  same.rows = {"KRSPT", "KRSPT"};
  const auto t1 = optimize_branch_lengths(parse_newick("(A:0.5,B:0.5);"), model, same, {});
  CHECK(t1.edge(0).length <= 1e-6);
  CharacterMatrix diff = same;
  diff.rows[1] = "RSPTK";
  const auto t2 = optimize_branch_lengths(parse_newick("(A:0.5,B:0.5);"), model, diff, {});
  CHECK(t2.edge(0).length == doctest::Approx(kMaxBranchLength));
}

TEST_CASE("three-taxon branch lengths match a grid-search oracle") {
  Rng rng(31);
  const auto truth = parse_newick("(A:0.2,B:0.5,C:0.9);");
  const auto model = make_model("PTKR", {0.1, 0.2, 0.3, 0.4});
  const auto m = simulate(truth, model, 80, 5);

  // Direct star-tree likelihood.
  auto ll = [&](double a, double b, double c) {
    const auto q = oracle::rate_matrix(model.freqs, model.mu);
    const auto pa = oracle::expm(q, a), pb = oracle::expm(q, b), pc = oracle::expm(q, c);
    double total = 0.0;
    for (std::size_t s = 0; s < m.n_sites(); ++s) {
      const auto xa = model.index_of(m.at(0, s)), xb = model.index_of(m.at(1, s)), xc = model.index_of(m.at(2, s));
      double site = 0.0;
      for (std::size_t r = 0; r < 4; ++r) site += model.freqs[r] * pa[r][xa] * pb[r][xb] * pc[r][xc];
      total += std::log(site);
    }
    return total;
  };
  double best = -1e300, ba = 0, bb = 0, bc = 0;
  for (double a = 0.001; a < 2.0; a += 0.05)
    for (double b = 0.001; b < 2.0; b += 0.05)
      for (double c = 0.001; c < 3.0; c += 0.05) {
        const double v = ll(a, b, c);
        if (v > best) best = v, ba = a, bb = b, bc = c;
      }
  const double ca = ba, cb = bb, cc = bc;
  for (double a = std::max(1e-6, ca - 0.05); a <= ca + 0.05; a += 1e-3)
    for (double b = std::max(1e-6, cb - 0.05); b <= cb + 0.05; b += 5e-3)
      for (double c = std::max(1e-6, cc - 0.05); c <= cc + 0.05; c += 5e-3) {
        const double v = ll(a, b, c);
        if (v > best) best = v, ba = a, bb = b, bc = c;
      }
  // Final coordinate passes at the 1e-3 step on the two coarser axes.
  for (int pass = 0; pass < 3; ++pass) {
    for (double b = std::max(1e-6, bb - 0.01); b <= bb + 0.01; b += 1e-3)
      if (const double v = ll(ba, b, bc); v > best) best = v, bb = b;
    for (double c = std::max(1e-6, bc - 0.01); c <= bc + 0.01; c += 1e-3)
      if (const double v = ll(ba, bb, c); v > best) best = v, bc = c;
  }
  const auto fit = nni_search(parse_newick("(A:0.05,B:0.05,C:0.05);"), model, m, {});
  CHECK(std::abs(fit.log_likelihood - best) <= 1e-3);
}

TEST_CASE("nni_search properties") {
  Rng rng(77);
  const auto taxa = oracle::labels(7);
  const auto truth = oracle::random_tree(taxa, rng, 0.15);
  const auto model = uniform10(0.05);
  const auto m = simulate(truth, model, 600, 11);

  SUBCASE("trace is non-decreasing and logL matches a fresh evaluation") {
    const auto start = init_tree(m, model, 1);
    const auto fit = nni_search(start, model, m, {});
    for (std::size_t i = 1; i < fit.search_trace.size(); ++i) {
      CHECK(fit.search_trace[i].log_likelihood > fit.search_trace[i - 1].log_likelihood);
      CHECK(fit.search_trace[i].round == fit.search_trace[i - 1].round + 1);
    }
    CHECK(std::abs(fit.log_likelihood - total_log_likelihood(fit.tree, model, m).total_log_likelihood) < 1e-6);
    CHECK(fit.log_likelihood >= fit.search_trace.back().log_likelihood - 1e-6);
  }
  SUBCASE("branch optimisation never lowers the likelihood") {
    const auto start = init_tree(m, model, 1);
    const double before = total_log_likelihood(start, model, m).total_log_likelihood;
    const auto after = optimize_branch_lengths(start, model, m, {});
    CHECK(total_log_likelihood(after, model, m).total_log_likelihood >= before - 1e-4);
    for (const auto& e : after.edges()) {
      CHECK(e.length >= kMinBranchLength);
      CHECK(e.length <= kMaxBranchLength);
    }
  }
  SUBCASE("three taxa only get branch lengths") {
    CharacterMatrix small = m;
    small.taxa.resize(3);
    small.rows.resize(3);
    const auto start = init_tree(small, model, 1);
    const auto fit = nni_search(start, model, small, {});
    CHECK(fit.search_trace.size() == 1);
    CHECK(topology_string(fit.tree) == topology_string(start));
  }
  SUBCASE("non-binary start is rejected") {
    CHECK_THROWS_AS(nni_search(parse_newick("(T00,T01,T02,T03,T04,T05,T06);"), model, m, {}), DomainError);
  }
}

TEST_CASE("starting at the generating tree accepts no move") {
  int unchanged = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed * 101);
    const auto truth = oracle::random_tree(oracle::labels(6), rng, 0.2);
    const auto model = uniform10();
    const auto m = simulate(truth, model, 2000, seed);
    const auto fit = nni_search(truth, model, m, {});
    unchanged += topology_string(fit.tree) == topology_string(truth) && fit.search_trace.size() == 1;
  }
  CHECK(unchanged >= 4);
}

TEST_CASE("ml_tree") {
  Rng rng(5);
  const auto truth = oracle::random_tree(oracle::labels(6), rng, 0.2);
  const auto m = simulate(truth, uniform10(0.01), 400, 3);
  SUBCASE("restarts take the best single run") {
    SearchConfig one;
    one.seed = 10;
    SearchConfig other = one;
    other.seed = 11;
    SearchConfig both = one;
    both.random_restarts = 2;
    const double a = ml_tree(m, 0.01, one).log_likelihood;
    const double b = ml_tree(m, 0.01, other).log_likelihood;
    CHECK(ml_tree(m, 0.01, both).log_likelihood == std::max(a, b));
  }
  SUBCASE("deterministic") {
    const auto x = ml_tree(m, 0.06, {});
    const auto y = ml_tree(m, 0.06, {});
    CHECK(write_newick(x.tree) == write_newick(y.tree));
    CHECK(x.log_likelihood == y.log_likelihood);
    CHECK(x.model.p_inv == 0.06);
  }
  SUBCASE("two taxa") {
    CharacterMatrix two = m;
    two.taxa.resize(2);
    two.rows.resize(2);
    const auto fit = ml_tree(two, 0.01, {});
    CHECK(fit.tree.n_edges() == 1);
    CHECK(fit.tree.edge(0).length > kMinBranchLength);
  }
  SUBCASE("errors") {
    SearchConfig bad;
    bad.max_nni_rounds = 0;
    CHECK_THROWS_AS(ml_tree(m, 0.01, bad), DomainError);
    CharacterMatrix one = m;
    one.taxa.resize(1);
    one.rows.resize(1);
    CHECK_THROWS_AS(ml_tree(one, 0.01, {}), DomainError);
  }
}

TEST_CASE("p_inv estimation recovers the generating proportion") {
  Rng rng(12);
  const auto truth = oracle::random_tree(oracle::labels(8), rng, 0.3);
  const auto m = simulate(truth, uniform10(0.25), 1500, 4);
  MlOptions o;
  o.estimate_p_inv = true;
  const auto fit = ml_tree(m, o, {});
  CHECK(fit.model.p_inv == doctest::Approx(0.25).epsilon(0.3));
  CHECK(std::abs(fit.log_likelihood - total_log_likelihood(fit.tree, fit.model, m).total_log_likelihood) < 1e-6);
  o.estimate_gamma = true;
  o.model.gamma_shape = 1.0;
  const auto g = ml_tree(m, o, {});
  // No rate variation in the data: the shape runs to its upper bound, where
  // two categories are close to, but not exactly, equal rates.
  REQUIRE(g.model.gamma_shape.has_value());
  CHECK(*g.model.gamma_shape > 50.0);
  CHECK(std::abs(g.log_likelihood - fit.log_likelihood) < 1.0);
}
