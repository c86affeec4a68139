#include "relate/lrt.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numeric>

#include "relate/bootsim.hpp"
#include "relate/error.hpp"
#include "relate/parallel.hpp"
#include "relate/random.hpp"

namespace relate {

std::string to_string(Decision d) { return d == Decision::Related ? "RELATED" : "NOT_SUPPORTED"; }

double lrt_statistic(const MlFit& fit_alt, const MlFit& fit_null) {
  return 2.0 * (fit_alt.log_likelihood - fit_null.log_likelihood);
}

double student_t_upper(double t, double df) {
  if (!(df > 0.0)) throw DomainError("degrees of freedom must be positive");
  if (std::isnan(t)) throw NumericalError("t statistic is NaN");
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTest paired_t_test(std::span<const double> observed, std::span<const double> null_samples) {
  if (observed.size() != null_samples.size()) throw DomainError("paired samples differ in length");
  const std::size_t k = observed.size();
  if (k < 2) throw DomainError("paired t-test needs at least two pairs");
  std::vector<double> x(k);
  for (std::size_t j = 0; j < k; ++j) x[j] = observed[j] - null_samples[j];
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  TTest out;
  if (sd == 0.0 || !(sd > 1e-14 * std::abs(mean))) {
    out.t = mean > 0 ? INFINITY : mean < 0 ? -INFINITY : 0.0;
    out.p = mean > 0 ? 0.0 : mean < 0 ? 1.0 : 0.5;
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(k)));
  out.p = student_t_upper(out.t, static_cast<double>(k - 1));
  return out;
}

LrtReport run_lrt(const CharacterMatrix& matrix, const LrtConfig& cfg) {
  matrix.validate();
  if (matrix.n_taxa() < 3) throw DomainError("the test needs at least three taxa");
  if (!(0.0 <= cfg.p_inv_null && cfg.p_inv_null < cfg.p_inv_alt && cfg.p_inv_alt < 1.0))
    throw DomainError("need 0 <= p_inv_null < p_inv_alt < 1");
  if (cfg.k < 2) throw DomainError("k must be at least 2");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");

  LrtReport report;
  report.config = cfg;
  report.runs.resize(static_cast<std::size_t>(cfg.k));

  auto fit = [&](const CharacterMatrix& m, double p_inv, std::uint64_t seed) {
    MlOptions options;
    options.model = cfg.model;
    options.model.p_inv = p_inv;
    SearchConfig search = cfg.search;
    search.seed = seed;
    return ml_tree(m, options, search);
  };

  parallel_for(report.runs.size(), resolve_threads(cfg.threads), [&](std::size_t idx) {
    const int j = static_cast<int>(idx) + 1;
    LrtRun& run = report.runs[idx];
    run.j = j;
    run.seed = cfg.seed + static_cast<std::uint64_t>(j) * 10007u;
    try {
      run.fit_null = fit(matrix, cfg.p_inv_null, run.seed);
      run.fit_alt = fit(matrix, cfg.p_inv_alt, run.seed);
      run.delta_observed = lrt_statistic(run.fit_alt, run.fit_null);
      SimConfig sim;
      sim.seed = derive_seed(run.seed, 0xB007);
      const CharacterMatrix replicate = simulate_matrix(run.fit_null, matrix, sim);
      const MlFit rep_null = fit(replicate, cfg.p_inv_null, run.seed);
      const MlFit rep_alt = fit(replicate, cfg.p_inv_alt, run.seed);
      run.replicate_ll_null = rep_null.log_likelihood;
      run.replicate_ll_alt = rep_alt.log_likelihood;
      run.delta_null = lrt_statistic(rep_alt, rep_null);
    } catch (const NumericalError& e) {
      throw NumericalError("run " + std::to_string(j) + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("run " + std::to_string(j) + ": " + e.what());
    } catch (const InsufficientDataError& e) {
      throw InsufficientDataError("run " + std::to_string(j) + ": " + e.what());
    }
  });

  for (const auto& run : report.runs) {
    report.delta_observed.push_back(run.delta_observed);
    report.delta_null.push_back(run.delta_null);
  }
  report.mean_observed = std::accumulate(report.delta_observed.begin(), report.delta_observed.end(), 0.0) /
                         static_cast<double>(cfg.k);
  const TTest test = paired_t_test(report.delta_observed, report.delta_null);
  report.t_statistic = test.t;
  report.p_value = test.p;
  report.decision = test.p < cfg.alpha && report.mean_observed > 0.0 ? Decision::Related : Decision::NotSupported;
  return report;
}

}  // namespace relate
