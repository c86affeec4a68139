#include "doctest.h"
#include "oracles.hpp"
#include "relate/error.hpp"
#include "relate/likelihood.hpp"

using namespace relate;

namespace {

CharacterMatrix random_matrix(const std::vector<std::string>& taxa, const std::string& states, std::size_t sites,
                              Rng& rng, double gap_rate = 0.1) {
  CharacterMatrix m;
  m.taxa = taxa;
  for (std::size_t i = 0; i < taxa.size(); ++i) {
    std::string row;
    for (std::size_t s = 0; s < sites; ++s)
      row += rng.uniform() < gap_rate ? kGap : states[rng.below(states.size())];
    m.rows.push_back(row);
  }
  return m;
}

// log L from the brute-force oracle and the explicit mixture.
std::vector<double> oracle_site_logs(const Phylogeny& tree, const SubstitutionModel& model,
                                     const CharacterMatrix& m) {
  std::vector<double> out;
  for (std::size_t s = 0; s < m.n_sites(); ++s) {
    std::map<std::size_t, int> leaf_state;
    int constant = -2;  // -2: nothing seen yet, -3: variable
    for (std::size_t i = 0; i < m.n_taxa(); ++i) {
      const char c = m.at(i, s);
      const int st = c == kGap ? -1 : static_cast<int>(model.index_of(c));
      leaf_state[tree.leaf_node(m.taxa[i])] = st;
      if (st >= 0) constant = constant == -2 ? st : (constant == st ? st : -3);
    }
    double var = 0.0;
    for (double r : model.rates) var += oracle::site_likelihood_bruteforce(tree, model.freqs, model.mu, leaf_state, r);
    var /= static_cast<double>(model.rates.size());
    const double inv = constant == -2 ? 1.0 : constant >= 0 ? model.freqs[static_cast<std::size_t>(constant)] : 0.0;
    out.push_back(std::log((1 - model.p_inv) * var + model.p_inv * inv));
  }
  return out;
}

}  // namespace

TEST_CASE("single taxon, no edges") {
  const auto model = make_model("PTK", {0.2, 0.3, 0.5});
  CharacterMatrix m;
  m.taxa = {"A"};
  m.rows = {"K"};
  Phylogeny t;
  t.add_leaf("A");
  const auto r = total_log_likelihood(t, model, m);
  CHECK(r.total_log_likelihood == doctest::Approx(std::log(0.5)));
}

TEST_CASE("site_conditionals") {
  const auto model = make_model("PTK", {0.2, 0.3, 0.5});
  CharacterMatrix m;
  m.taxa = {"A", "B"};
  m.rows = {"K-", "KK"};
  const Phylogeny t = parse_newick("(A:0,B:0);");
  const auto root = site_conditionals(t, model, m, 0, 1.0);
  double l = 0.0;
  for (std::size_t i = 0; i < 3; ++i) l += model.freqs[i] * root[i];
  CHECK(l == doctest::Approx(0.5));
  // Gap leaf acts as all ones, so only B constrains the site.
  const auto gap_site = site_conditionals(t, model, m, 1, 1.0);
  double lg = 0.0;
  for (std::size_t i = 0; i < 3; ++i) lg += model.freqs[i] * gap_site[i];
  CHECK(lg == doctest::Approx(0.5));
}

TEST_CASE("pruning equals brute force on small trees") {
  Rng rng(11);
  for (int n = 2; n <= 5; ++n)
    for (int trial = 0; trial < 4; ++trial) {
      const auto taxa = oracle::labels(n);
      const Phylogeny tree = oracle::random_tree(taxa, rng, 0.4);
      const CharacterMatrix m = random_matrix(taxa, "KRS", 20, rng);
      for (double p_inv : {0.0, 0.06, 0.3}) {
        for (std::optional<double> shape : {std::optional<double>{}, std::optional<double>{0.8}}) {
          const auto model = make_model("KRS", {0.5, 0.3, 0.2}, p_inv, shape, 2);
          const auto got = total_log_likelihood(tree, model, m);
          const auto want = oracle_site_logs(tree, model, m);
          REQUIRE(got.per_site_log_likelihoods.size() == want.size());
          double total = 0.0;
          for (std::size_t s = 0; s < want.size(); ++s) {
            CHECK(std::abs(got.per_site_log_likelihoods[s] - want[s]) <= 1e-10 * std::abs(want[s]) + 1e-14);
            total += want[s];
          }
          CHECK(std::abs(got.total_log_likelihood - total) <= 1e-10 * std::abs(total));
        }
      }
    }
}

TEST_CASE("total equals the sum of per-site values") {
  Rng rng(4);
  const auto taxa = oracle::labels(8);
  const auto tree = oracle::random_tree(taxa, rng, 0.2);
  const auto m = random_matrix(taxa, std::string(kDolgoClasses), 300, rng);
  const auto model = build_model(m, {.p_inv = 0.05});
  const auto r = total_log_likelihood(tree, model, m);
  double s = 0.0;
  for (double v : r.per_site_log_likelihoods) s += v;
  CHECK(std::abs(s - r.total_log_likelihood) < 1e-8);
}

TEST_CASE("virtual-root invariance") {
  Rng rng(21);
  const auto taxa = oracle::labels(9);
  const auto tree = oracle::random_tree(taxa, rng, 0.3);
  const auto m = random_matrix(taxa, std::string(kDolgoClasses), 200, rng);
  ModelOptions o;
  o.p_inv = 0.1;
  o.gamma_shape = 0.5;
  o.n_rate_cats = 4;
  LikelihoodEngine engine(tree, build_model(m, o), m);
  const double ref = engine.log_likelihood();
  for (std::size_t e = 0; e < tree.n_edges(); ++e) CHECK(std::abs(engine.log_likelihood_at(e) - ref) < 1e-9);
}

TEST_CASE("an all-gap taxon changes nothing") {
  Rng rng(8);
  const auto taxa = oracle::labels(6);
  const auto tree = oracle::random_tree(taxa, rng, 0.3);
  const auto m = random_matrix(taxa, "PTK", 50, rng);
  const auto model = make_model("PTK", {0.3, 0.3, 0.4}, 0.1);
  const auto base = total_log_likelihood(tree, model, m);

  CharacterMatrix m2 = m;
  m2.taxa.push_back("Zgap");
  m2.rows.push_back(std::string(m.n_sites(), kGap));
  Phylogeny t2 = tree;
  const auto leaf = t2.leaf_node(taxa[0]);
  // Graft the new leaf onto the middle of the edge above taxa[0].
  const auto e = t2.incident(leaf).front();
  const auto up = t2.other(e, leaf);
  const double len = t2.edge(e).length;
  Phylogeny t3;
  std::vector<std::size_t> map(t2.n_nodes());
  for (std::size_t v = 0; v < t2.n_nodes(); ++v) map[v] = t2.is_leaf(v) ? t3.add_leaf(t2.label(v)) : t3.add_internal();
  for (std::size_t f = 0; f < t2.n_edges(); ++f)
    if (f != e) t3.add_edge(map[t2.edge(f).a], map[t2.edge(f).b], t2.edge(f).length);
  const auto mid = t3.add_internal();
  t3.add_edge(map[leaf], mid, len / 2);
  t3.add_edge(mid, map[up], len / 2);
  t3.add_edge(mid, t3.add_leaf("Zgap"), 0.7);
  const auto more = total_log_likelihood(t3, model, m2);
  for (std::size_t s = 0; s < m.n_sites(); ++s)
    CHECK(std::abs(more.per_site_log_likelihoods[s] - base.per_site_log_likelihoods[s]) < 1e-12);
}

TEST_CASE("constant matrix prefers larger p_inv") {
  CharacterMatrix m;
  m.taxa = {"A", "B", "C", "D"};
  m.rows = {"KKKRRR", "KKKRRR", "KKKRRR", "KKKRRR"};
  const auto tree = parse_newick("((A:0.3,B:0.3):0.2,(C:0.3,D:0.3));");
  double prev = -1e300;
  for (double p : {0.0, 0.1, 0.3, 0.6, 0.9}) {
    const double ll = total_log_likelihood(tree, make_model("KRS", {0.4, 0.4, 0.2}, p), m).total_log_likelihood;
    CHECK(ll >= prev);
    prev = ll;
  }
}

TEST_CASE("errors and scaling") {
  const auto model = make_model("KR", {0.5, 0.5});
  CharacterMatrix m;
  m.taxa = {"A", "B"};
  m.rows = {"KR", "KK"};
  CHECK_THROWS_AS(total_log_likelihood(parse_newick("(A,C);"), model, m), DomainError);
  CharacterMatrix bad = m;
  bad.rows[0] = "KS";
  CHECK_THROWS_AS(total_log_likelihood(parse_newick("(A,B);"), model, bad), DomainError);

  // 400 taxa on a caterpillar with long branches forces rescaling.
  Rng rng(1);
  const auto taxa = oracle::labels(400, "L");
  const auto tree = oracle::random_tree(taxa, rng, 3.0);
  const auto big = random_matrix(taxa, std::string(kDolgoClasses), 5, rng, 0.0);
  const auto r = total_log_likelihood(tree, build_model(big), big);
  CHECK(std::isfinite(r.total_log_likelihood));
  CHECK(r.total_log_likelihood < -2000.0);
}
