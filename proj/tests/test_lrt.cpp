#include "doctest.h"
#include "oracles.hpp"
#include "relate/bootsim.hpp"
#include "relate/error.hpp"
#include "relate/lrt.hpp"

using namespace relate;

TEST_CASE("paired_t_test examples") {
  const std::vector<double> zeros(5, 0.0);
  const auto same = paired_t_test(zeros, zeros);
  CHECK(same.p == 0.5);

  // d = {0, 2}: mean 1, sd sqrt(2), t = 1 with one degree of freedom.
  const std::vector<double> obs{0.0, 2.0}, nul{0.0, 0.0};
  const auto one = paired_t_test(obs, nul);
  CHECK(one.t == doctest::Approx(1.0));
  CHECK(one.p == doctest::Approx(0.25).epsilon(1e-12));

  const std::vector<double> up{3, 3, 3}, down{1, 1, 1};
  CHECK(paired_t_test(up, down).p == 0.0);
  CHECK(paired_t_test(down, up).p == 1.0);

  CHECK_THROWS_AS(paired_t_test(up, obs), DomainError);
  const std::vector<double> single{1.0};
  CHECK_THROWS_AS(paired_t_test(single, single), DomainError);
}

TEST_CASE("student_t_upper matches numerical integration") {
  for (double df : {1.0, 5.0, 14.0})
    for (double t : {-3.0, 0.0, 1.0, 3.0}) {
      CAPTURE(df);
      CAPTURE(t);
      CHECK(std::abs(student_t_upper(t, df) - oracle::t_upper_tail(t, df)) < 1e-6);
    }
}

TEST_CASE("paired_t_test statistic") {
  const std::vector<double> obs{1.5, -0.2, 3.1, 0.7}, nul{0.1, 0.3, -1.0, 0.2};
  std::vector<double> d;
  for (std::size_t i = 0; i < obs.size(); ++i) d.push_back(obs[i] - nul[i]);
  const double mean = (d[0] + d[1] + d[2] + d[3]) / 4;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double t = mean / (std::sqrt(ss / 3) / 2);
  const auto r = paired_t_test(obs, nul);
  CHECK(r.t == doctest::Approx(t));
  CHECK(r.p == doctest::Approx(oracle::t_upper_tail(t, 3)).epsilon(1e-6));
  // Swapping the samples mirrors the tail.
  CHECK(paired_t_test(nul, obs).p == doctest::Approx(1.0 - r.p));
}

TEST_CASE("lrt_statistic") {
  MlFit alt, nul;
  alt.log_likelihood = -100.0;
  nul.log_likelihood = -103.5;
  CHECK(lrt_statistic(alt, nul) == doctest::Approx(7.0));
  CHECK(lrt_statistic(nul, alt) == doctest::Approx(-7.0));
  CHECK(lrt_statistic(alt, alt) == 0.0);
  CHECK(to_string(Decision::Related) == "RELATED");
  CHECK(to_string(Decision::NotSupported) == "NOT_SUPPORTED");
}

TEST_CASE("run_lrt") {
  Rng rng(8);
  const auto taxa = oracle::labels(5);
  MlFit gen;
  gen.tree = oracle::random_tree(taxa, rng, 0.2);
  gen.model = make_model(std::string(kDolgoClasses), std::vector<double>(10, 1.0), 0.3);
  CharacterMatrix tmpl;
  tmpl.taxa = taxa;
  tmpl.rows.assign(5, std::string(120, 'P'));
  SimConfig sc;
  sc.retain_gap_mask = false;
  const auto m = simulate_matrix(gen, tmpl, sc);

  LrtConfig cfg;
  cfg.k = 3;
  const auto a = run_lrt(m, cfg);
  REQUIRE(a.runs.size() == 3);
  CHECK(a.delta_observed.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(a.runs[j].seed == cfg.seed + (j + 1) * 10007);
    CHECK(a.runs[j].fit_alt.model.p_inv == cfg.p_inv_alt);
    CHECK(a.runs[j].fit_null.model.p_inv == cfg.p_inv_null);
    CHECK(a.delta_observed[j] == doctest::Approx(lrt_statistic(a.runs[j].fit_alt, a.runs[j].fit_null)));
    CHECK(a.delta_null[j] ==
          doctest::Approx(2.0 * (a.runs[j].replicate_ll_alt - a.runs[j].replicate_ll_null)));
  }
  const auto tt = paired_t_test(a.delta_observed, a.delta_null);
  CHECK(a.p_value == tt.p);
  const bool related = a.p_value < cfg.alpha && a.mean_observed > 0.0;
  CHECK((a.decision == Decision::Related) == related);

  cfg.threads = 2;
  const auto b = run_lrt(m, cfg);
  CHECK(b.delta_observed == a.delta_observed);
  CHECK(b.delta_null == a.delta_null);

  CharacterMatrix two = m;
  two.taxa.resize(2);
  two.rows.resize(2);
  CHECK_THROWS_AS(run_lrt(two, cfg), DomainError);
  cfg.k = 1;
  CHECK_THROWS_AS(run_lrt(m, cfg), DomainError);
}
