#include <benchmark/benchmark.h>

#include "relate/permtest.hpp"
#include "relate/random.hpp"

using namespace relate;

static WordTable table(int languages, int concepts) {
  static const std::string classes = "PTSKMNRWJH";
  Rng rng(3);
  WordTable t;
  for (int l = 0; l < languages; ++l) t.languages.push_back("L" + std::to_string(l));
  for (int c = 0; c < concepts; ++c) t.concepts.push_back("c" + std::to_string(c));
  for (int l = 0; l < languages; ++l) {
    std::vector<std::optional<Word>> row;
    for (int c = 0; c < concepts; ++c) {
      ClassSequence s{classes[rng.below(10)], classes[rng.below(10)]};
      row.push_back(Word{s, s});
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

static void BM_significance(benchmark::State& state) {
  const auto t = table(8, 100);
  const std::vector<std::size_t> a{0, 1, 2, 3}, b{4, 5, 6, 7};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        permutation_significance(WordMetric::turchin(), t, a, b, static_cast<int>(state.range(0)), 1).p_value);
}
BENCHMARK(BM_significance)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_clustering(benchmark::State& state) {
  const auto t = table(static_cast<int>(state.range(0)), 100);
  for (auto _ : state) benchmark::DoNotOptimize(run_permtest(WordMetric::p1_dolgo(), t, 199, 1).related());
}
BENCHMARK(BM_clustering)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
