#include <benchmark/benchmark.h>

#include "relate/bootsim.hpp"
#include "relate/likelihood.hpp"
#include "relate/mlsearch.hpp"

using namespace relate;

namespace {

Phylogeny caterpillar(int n) {
  Phylogeny t;
  std::size_t prev = t.add_leaf("T0");
  std::size_t hub = t.add_internal();
  t.add_edge(hub, prev, 0.1);
  t.add_edge(hub, t.add_leaf("T1"), 0.1);
  for (int i = 2; i < n - 1; ++i) {
    const std::size_t next = t.add_internal();
    t.add_edge(hub, next, 0.05);
    t.add_edge(next, t.add_leaf("T" + std::to_string(i)), 0.1);
    hub = next;
  }
  t.add_edge(hub, t.add_leaf("T" + std::to_string(n - 1)), 0.1);
  return t;
}

CharacterMatrix data(const Phylogeny& tree, std::size_t sites) {
  MlFit gen;
  gen.tree = tree;
  gen.model = make_model("PTSKMNRWJH", std::vector<double>(10, 1.0), 0.05);
  CharacterMatrix tmpl;
  tmpl.taxa = tree.leaf_labels();
  tmpl.rows.assign(tmpl.taxa.size(), std::string(sites, 'P'));
  SimConfig cfg;
  cfg.retain_gap_mask = false;
  return simulate_matrix(gen, tmpl, cfg);
}

}  // namespace

static void BM_full_evaluation(benchmark::State& state) {
  const auto tree = caterpillar(static_cast<int>(state.range(0)));
  const auto m = data(tree, static_cast<std::size_t>(state.range(1)));
  const auto model = make_model("PTSKMNRWJH", std::vector<double>(10, 1.0), 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(total_log_likelihood(tree, model, m).total_log_likelihood);
}
BENCHMARK(BM_full_evaluation)->Args({10, 500})->Args({40, 500})->Args({10, 5000})->Unit(benchmark::kMillisecond);

// One branch change then a re-evaluation, as in branch optimisation.
static void BM_branch_update(benchmark::State& state) {
  const auto tree = caterpillar(static_cast<int>(state.range(0)));
  const auto m = data(tree, 500);
  LikelihoodEngine engine(tree, make_model("PTSKMNRWJH", std::vector<double>(10, 1.0), 0.05), m);
  std::size_t e = 0;
  double len = 0.1;
  for (auto _ : state) {
    engine.set_branch_length(e, len);
    benchmark::DoNotOptimize(engine.log_likelihood_at(e));
    e = (e + 1) % tree.n_edges();
    len = len > 0.2 ? 0.05 : len + 0.01;
  }
}
BENCHMARK(BM_branch_update)->Arg(10)->Arg(40)->Unit(benchmark::kMicrosecond);

static void BM_ml_tree(benchmark::State& state) {
  const auto m = data(caterpillar(10), 500);
  for (auto _ : state) benchmark::DoNotOptimize(ml_tree(m, 0.01, {}).log_likelihood);
}
BENCHMARK(BM_ml_tree)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
