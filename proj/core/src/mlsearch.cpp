#include "relate/mlsearch.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>

#include "relate/error.hpp"
#include "relate/log.hpp"
#include "relate/random.hpp"

namespace relate {
namespace {

double clamp_length(double t) { return std::clamp(t, kMinBranchLength, kMaxBranchLength); }

Phylogeny clamped(Phylogeny tree) {
  for (std::size_t e = 0; e < tree.n_edges(); ++e) tree.set_length(e, clamp_length(tree.edge(e).length));
  return tree;
}

double heterozygosity(const SubstitutionModel& model) {
  double sum_sq = 0.0;
  for (double f : model.freqs) sum_sq += f * f;
  return 1.0 - sum_sq;
}

// Local re-optimisation after an NNI: the centre edge, its four neighbours,
// then the centre again.
double optimize_around(LikelihoodEngine& engine, std::size_t edge, double tolerance) {
  const auto& tree = engine.tree();
  std::vector<std::size_t> local;
  for (auto end : {tree.edge(edge).a, tree.edge(edge).b})
    for (auto f : tree.incident(end))
      if (f != edge) local.push_back(f);
  engine.optimize_branch(edge, tolerance);
  for (auto f : local) engine.optimize_branch(f, tolerance);
  return engine.optimize_branch(edge, tolerance);
}

double optimize_scalar(const std::function<double(double)>& objective, double lo, double hi, int bits = 20) {
  std::uintmax_t iters = 60;
  const auto [x, fx] =
      boost::math::tools::brent_find_minima([&](double v) { return -objective(v); }, lo, hi, bits, iters);
  (void)fx;
  return x;
}

}  // namespace

double model_distance(const std::string& a, const std::string& b, double h, std::size_t* shared_out) {
  std::size_t shared = 0, diff = 0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s] == kGap || b[s] == kGap) continue;
    ++shared;
    if (a[s] != b[s]) ++diff;
  }
  if (shared_out) *shared_out = shared;
  if (shared == 0 || !(h > 0.0)) return kMaxBranchLength;
  const double p = static_cast<double>(diff) / static_cast<double>(shared);
  const double arg = 1.0 - p / h;
  if (!(arg > 0.0)) return kMaxBranchLength;
  return std::clamp(-h * std::log(arg), 0.0, kMaxBranchLength);
}

Phylogeny neighbor_joining(const std::vector<std::string>& labels, const std::vector<std::vector<double>>& dist,
                           std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n == 0) throw DomainError("neighbour joining needs at least one taxon");
  Phylogeny tree;
  std::vector<std::size_t> node(n);
  for (std::size_t i = 0; i < n; ++i) node[i] = tree.add_leaf(labels[i]);
  if (n == 1) return tree;
  if (n == 2) {
    tree.add_edge(node[0], node[1], clamp_length(dist[0][1]));
    return tree;
  }

  Rng rng(seed, 0x4e4a);
  std::vector<std::vector<double>> d = dist;
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  while (active.size() > 3) {
    const std::size_t r = active.size();
    std::vector<double> row_sum(r, 0.0);
    for (std::size_t x = 0; x < r; ++x)
      for (std::size_t y = 0; y < r; ++y) row_sum[x] += d[active[x]][active[y]];
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::pair<std::size_t, std::size_t>> ties;
    for (std::size_t x = 0; x < r; ++x)
      for (std::size_t y = x + 1; y < r; ++y) {
        const double q = static_cast<double>(r - 2) * d[active[x]][active[y]] - row_sum[x] - row_sum[y];
        const double tol = ties.empty() ? 0.0 : 1e-12 * std::max(1.0, std::abs(best));
        if (ties.empty() || q < best - tol) {
          best = q;
          ties.assign(1, {x, y});
        } else if (std::abs(q - best) <= tol) {
          ties.emplace_back(x, y);
        }
      }
    const auto [x, y] = ties[ties.size() == 1 ? 0 : rng.below(ties.size())];
    const std::size_t i = active[x], j = active[y];
    const double dij = d[i][j];
    const double li = 0.5 * dij + (row_sum[x] - row_sum[y]) / (2.0 * static_cast<double>(r - 2));
    const double lj = dij - li;
    const std::size_t u = tree.add_internal();
    tree.add_edge(u, node[i], clamp_length(li));
    tree.add_edge(u, node[j], clamp_length(lj));
    // Reuse slot i for the new node.
    for (std::size_t k : active) {
      if (k == i || k == j) continue;
      const double duk = 0.5 * (d[i][k] + d[j][k] - dij);
      d[i][k] = d[k][i] = duk;
    }
    node[i] = u;
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(y));
  }
  const std::size_t a = active[0], b = active[1], c = active[2];
  const std::size_t centre = tree.add_internal();
  tree.add_edge(centre, node[a], clamp_length(0.5 * (d[a][b] + d[a][c] - d[b][c])));
  tree.add_edge(centre, node[b], clamp_length(0.5 * (d[a][b] + d[b][c] - d[a][c])));
  tree.add_edge(centre, node[c], clamp_length(0.5 * (d[a][c] + d[b][c] - d[a][b])));
  return tree;
}

Phylogeny init_tree(const CharacterMatrix& matrix, const SubstitutionModel& model, std::uint64_t seed) {
  const std::size_t m = matrix.n_taxa();
  if (m < 2) throw DomainError("a tree needs at least two taxa");
  const double h = heterozygosity(model);
  std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      std::size_t shared = 0;
      dist[i][j] = dist[j][i] = model_distance(matrix.rows[i], matrix.rows[j], h, &shared);
      if (shared == 0) warn("taxa " + matrix.taxa[i] + " and " + matrix.taxa[j] + " share no sites");
    }
  return neighbor_joining(matrix.taxa, dist, seed);
}

double optimize_branch_lengths(LikelihoodEngine& engine, const SearchConfig& cfg) {
  double ll = engine.log_likelihood();
  if (engine.tree().n_edges() == 0) return ll;
  const auto order = engine.tree().edge_preorder();
  for (int sweep = 0; sweep < cfg.max_bl_sweeps; ++sweep) {
    double now = ll;
    for (auto e : order) now = engine.optimize_branch(e, cfg.bl_tolerance);
    const double gain = now - ll;
    ll = std::max(ll, now);
    if (gain < cfg.ll_tolerance) break;
  }
  return ll;
}

Phylogeny optimize_branch_lengths(const Phylogeny& tree, const SubstitutionModel& model,
                                  const CharacterMatrix& matrix, const SearchConfig& cfg) {
  LikelihoodEngine engine(clamped(tree), model, matrix);
  optimize_branch_lengths(engine, cfg);
  return engine.tree();
}

MlFit nni_search(const Phylogeny& start, const SubstitutionModel& model, const CharacterMatrix& matrix,
                 const SearchConfig& cfg) {
  if (start.n_leaves() >= 4 && !start.is_binary()) throw DomainError("NNI search needs a binary start tree");
  LikelihoodEngine engine(clamped(start), model, matrix);
  MlFit fit;
  double ll = optimize_branch_lengths(engine, cfg);
  fit.search_trace.push_back({0, ll});

  if (start.n_leaves() >= 4) {
    for (int round = 1; round <= cfg.max_nni_rounds; ++round) {
      double best_gain = cfg.ll_tolerance;
      std::optional<Phylogeny> best_tree;
      std::size_t best_edge = 0;
      for (auto e : engine.tree().internal_edges()) {
        for (int which = 0; which < 2; ++which) {
          const Phylogeny saved = engine.tree();
          engine.apply_nni(e, which);
          const double candidate = optimize_around(engine, e, cfg.bl_tolerance);
          // Strict '>' keeps the lowest edge index among equal gains.
          if (candidate - ll > best_gain) {
            best_gain = candidate - ll;
            best_tree = engine.tree();
            best_edge = e;
          }
          engine.restore_near(e, saved);
        }
      }
      if (!best_tree) break;
      engine.restore_near(best_edge, *best_tree);
      ll = optimize_branch_lengths(engine, cfg);
      fit.search_trace.push_back({round, ll});
    }
  }
  fit.log_likelihood = engine.evaluate().total_log_likelihood;
  fit.tree = engine.tree();
  fit.model = engine.model();
  return fit;
}

namespace {

// Alternates topology search with p_inv / gamma-shape estimation.
MlFit refine_parameters(MlFit fit, const MlOptions& options, const CharacterMatrix& matrix,
                        const SearchConfig& cfg) {
  SearchConfig quick = cfg;
  quick.max_bl_sweeps = 5;
  quick.ll_tolerance = std::max(cfg.ll_tolerance, 1e-3);
  for (int pass = 0; pass < 3; ++pass) {
    LikelihoodEngine engine(fit.tree, fit.model, matrix);
    SubstitutionModel model = fit.model;
    if (options.estimate_p_inv) {
      const double p = optimize_scalar(
          [&](double v) {
            engine.set_model(with_p_inv(model, v));
            return optimize_branch_lengths(engine, quick);
          },
          0.0, 0.5);
      engine.set_tree(fit.tree);
      model = with_p_inv(model, p);
    }
    if (options.estimate_gamma) {
      const std::size_t cats = std::max<std::size_t>(model.n_rate_cats(), 2);
      const double log_alpha = optimize_scalar(
          [&](double v) {
            engine.set_model(with_gamma(model, std::exp(v), cats));
            return optimize_branch_lengths(engine, quick);
          },
          std::log(0.05), std::log(100.0));
      engine.set_tree(fit.tree);
      model = with_gamma(model, std::exp(log_alpha), cats);
    }
    MlFit next = nni_search(fit.tree, model, matrix, cfg);
    const double gain = next.log_likelihood - fit.log_likelihood;
    if (next.log_likelihood >= fit.log_likelihood) {
      // Keep the combined trace monotone.
      for (auto& entry : next.search_trace) entry.round += fit.search_trace.back().round;
      std::vector<TraceEntry> trace = std::move(fit.search_trace);
      for (const auto& entry : next.search_trace)
        if (entry.log_likelihood >= trace.back().log_likelihood) trace.push_back(entry);
      next.search_trace = std::move(trace);
      fit = std::move(next);
    }
    if (gain < cfg.ll_tolerance) break;
  }
  return fit;
}

}  // namespace

MlFit ml_tree(const CharacterMatrix& matrix, const MlOptions& options, const SearchConfig& cfg) {
  if (matrix.n_taxa() < 2) throw DomainError("ML search needs at least two taxa");
  if (cfg.random_restarts < 1 || cfg.max_nni_rounds < 1) throw DomainError("restarts and rounds must be >= 1");
  if (!(cfg.bl_tolerance > 0.0 && cfg.ll_tolerance > 0.0)) throw DomainError("tolerances must be positive");
  ModelOptions model_options = options.model;
  if (options.estimate_gamma && !model_options.gamma_shape) model_options.gamma_shape = 1.0;
  if (options.estimate_p_inv && model_options.p_inv == 0.0) model_options.p_inv = 0.05;
  const SubstitutionModel model = build_model(matrix, model_options);

  std::optional<MlFit> best;
  for (int r = 0; r < cfg.random_restarts; ++r) {
    SearchConfig run = cfg;
    run.seed = cfg.seed + static_cast<std::uint64_t>(r);
    const Phylogeny start = init_tree(matrix, model, run.seed);
    MlFit fit = nni_search(start, model, matrix, run);
    if (options.estimate_p_inv || options.estimate_gamma) fit = refine_parameters(std::move(fit), options, matrix, run);
    if (!best || fit.log_likelihood > best->log_likelihood) best = std::move(fit);
  }
  return *best;
}

MlFit ml_tree(const CharacterMatrix& matrix, double p_inv, const SearchConfig& cfg) {
  MlOptions options;
  options.model.p_inv = p_inv;
  return ml_tree(matrix, options, cfg);
}

}  // namespace relate
