#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "relate/mlsearch.hpp"
#include "relate/msa.hpp"

namespace relate {

enum class Decision { Related, NotSupported };
std::string to_string(Decision d);

struct LrtConfig {
  double p_inv_null = 0.01;
  double p_inv_alt = 0.06;
  int k = 15;
  double alpha = 0.05;
  std::uint64_t seed = 42;
  SearchConfig search;
  ModelOptions model;  // p_inv here is ignored; the two fixed values above apply
  unsigned threads = 0;  // 0: resolve_threads default
};

struct LrtRun {
  int j = 0;
  std::uint64_t seed = 0;
  double delta_observed = 0.0;
  double delta_null = 0.0;
  MlFit fit_null;
  MlFit fit_alt;
  double replicate_ll_null = 0.0;
  double replicate_ll_alt = 0.0;
};

struct TTest {
  double t = 0.0;
  double p = 0.5;
};

struct LrtReport {
  LrtConfig config;
  std::vector<double> delta_observed;
  std::vector<double> delta_null;
  double mean_observed = 0.0;
  double t_statistic = 0.0;
  double p_value = 0.5;
  Decision decision = Decision::NotSupported;
  std::vector<LrtRun> runs;
};

// 2 (logL_alt - logL_null).
double lrt_statistic(const MlFit& fit_alt, const MlFit& fit_null);

// Upper tail of Student's t with df degrees of freedom.
double student_t_upper(double t, double df);

// One-sided paired t-test of observed > null. A zero standard deviation
// gives p = 0, 0.5 or 1 by the sign of the mean difference. Throws
// DomainError on a length mismatch or fewer than two pairs.
TTest paired_t_test(std::span<const double> observed, std::span<const double> null_samples);

// k paired runs: fit both hypotheses on the data, simulate one replicate
// from the null fit, fit both on the replicate. Run j uses seed + j * 10007.
// Needs at least three taxa. A failing run is rethrown with its index.
LrtReport run_lrt(const CharacterMatrix& matrix, const LrtConfig& cfg = {});

}  // namespace relate
