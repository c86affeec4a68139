#include <benchmark/benchmark.h>

#include "relate/msa.hpp"
#include "relate/random.hpp"

using namespace relate;

static ClassSequence random_word(Rng& rng, std::size_t n) {
  static const std::string classes = "PTSKMNRWJH";
  ClassSequence s;
  for (std::size_t i = 0; i < n; ++i) s += classes[rng.below(classes.size())];
  return s;
}

static void BM_pairwise(benchmark::State& state) {
  Rng rng(1);
  const auto a = random_word(rng, static_cast<std::size_t>(state.range(0)));
  const auto b = random_word(rng, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_align(a, b));
}
BENCHMARK(BM_pairwise)->Arg(3)->Arg(8)->Arg(32);

static void BM_progressive(benchmark::State& state) {
  Rng rng(2);
  std::vector<ClassSequence> words;
  for (int i = 0; i < state.range(0); ++i) words.push_back(random_word(rng, 2 + rng.below(4)));
  for (auto _ : state) benchmark::DoNotOptimize(progressive_align(words));
}
BENCHMARK(BM_progressive)->Arg(8)->Arg(30)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
