#include "relate/likelihood.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "relate/error.hpp"

namespace relate {
namespace {

constexpr int kScaleExponent = 256;
const double kScaleThreshold = std::ldexp(1.0, -kScaleExponent);
constexpr std::size_t kNone = static_cast<std::size_t>(-1);

double log_sum_exp(double a, double b) {
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

SitePatterns compress_sites(const CharacterMatrix& matrix, const SubstitutionModel& model) {
  matrix.validate();
  SitePatterns out;
  out.n_taxa = matrix.n_taxa();
  const std::size_t n = matrix.n_sites();
  out.site_pattern.resize(n);
  std::unordered_map<std::string, std::size_t> index;
  std::string column(out.n_taxa, kGap);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < out.n_taxa; ++t) column[t] = matrix.rows[t][s];
    auto [it, fresh] = index.try_emplace(column, out.weights.size());
    if (fresh) {
      int observed = -1;
      bool constant = true;
      for (std::size_t t = 0; t < out.n_taxa; ++t) {
        const char c = column[t];
        if (c == kGap) {
          out.states.push_back(SitePatterns::kMissing);
          continue;
        }
        const std::size_t k = model.index_of(c);
        if (k == kNone) throw DomainError(std::string("symbol '") + c + "' is not a model state");
        out.states.push_back(static_cast<std::uint16_t>(k));
        if (observed < 0) observed = static_cast<int>(k);
        else if (observed != static_cast<int>(k)) constant = false;
      }
      out.weights.push_back(0.0);
      out.invariant_term.push_back(observed < 0 ? 1.0 : (constant ? model.freqs[static_cast<std::size_t>(observed)] : 0.0));
    }
    out.weights[it->second] += 1.0;
    out.site_pattern[s] = it->second;
  }
  return out;
}

LikelihoodEngine::LikelihoodEngine(Phylogeny tree, SubstitutionModel model, const CharacterMatrix& matrix)
    : tree_(std::move(tree)), model_(std::move(model)), patterns_(compress_sites(matrix, model_)) {
  bind_leaves(&matrix);
  partials_.resize(2 * tree_.n_edges());
}

void LikelihoodEngine::bind_leaves(const CharacterMatrix* matrix) {
  auto taxa = matrix->taxa;
  std::sort(taxa.begin(), taxa.end());
  if (taxa != tree_.leaf_labels()) throw DomainError("tree leaves do not match matrix taxa");
  leaf_taxon_.assign(tree_.n_nodes(), kNone);
  for (std::size_t row = 0; row < matrix->n_taxa(); ++row) leaf_taxon_[tree_.leaf_node(matrix->taxa[row])] = row;
}

void LikelihoodEngine::set_model(SubstitutionModel model) {
  if (model.states != model_.states) throw DomainError("replacement model uses a different state set");
  const bool freqs_changed = model.freqs != model_.freqs;
  model_ = std::move(model);
  if (freqs_changed)
    for (std::size_t p = 0; p < patterns_.size(); ++p) {
      double& term = patterns_.invariant_term[p];
      if (term == 0.0 || term == 1.0) continue;
      for (std::size_t t = 0; t < patterns_.n_taxa; ++t)
        if (patterns_.state(p, t) != SitePatterns::kMissing) {
          term = model_.freqs[patterns_.state(p, t)];
          break;
        }
    }
  invalidate_all();
}

void LikelihoodEngine::set_tree(Phylogeny tree) {
  auto old_labels = tree_.leaf_labels();
  if (tree.leaf_labels() != old_labels) throw DomainError("replacement tree has different leaves");
  std::vector<std::size_t> rows(tree.n_nodes(), kNone);
  for (std::size_t v = 0; v < tree_.n_nodes(); ++v)
    if (leaf_taxon_[v] != kNone) rows[tree.leaf_node(tree_.label(v))] = leaf_taxon_[v];
  tree_ = std::move(tree);
  leaf_taxon_ = std::move(rows);
  partials_.assign(2 * tree_.n_edges(), Partial{});
}

void LikelihoodEngine::invalidate_all() {
  for (auto& p : partials_) p.valid = false;
}

void LikelihoodEngine::invalidate_away(std::size_t edge) {
  std::vector<std::pair<std::size_t, std::size_t>> stack;  // (node, edge we arrived by)
  stack.emplace_back(tree_.edge(edge).a, edge);
  stack.emplace_back(tree_.edge(edge).b, edge);
  while (!stack.empty()) {
    const auto [v, via] = stack.back();
    stack.pop_back();
    for (auto f : tree_.incident(v)) {
      if (f == via) continue;
      auto& p = partials_[directed(f, v)];
      // Partials further out were computed from this one, so an already
      // invalid entry means the whole branch beyond it is invalid too.
      if (!p.valid && via != edge) continue;
      p.valid = false;
      stack.emplace_back(tree_.other(f, v), f);
    }
  }
}

const LikelihoodEngine::Partial& LikelihoodEngine::partial(std::size_t edge, std::size_t from) {
  Partial& p = partials_[directed(edge, from)];
  if (!p.valid) compute(p, edge, from);
  return p;
}

void LikelihoodEngine::compute(Partial& out, std::size_t edge, std::size_t from) {
  const std::size_t S = model_.size(), C = model_.n_rate_cats(), P = patterns_.size();
  out.values.assign(P * C * S, 1.0);
  out.scale.assign(P * C, 0);
  if (leaf_taxon_[from] != kNone) {
    const std::size_t taxon = leaf_taxon_[from];
    for (std::size_t p = 0; p < P; ++p) {
      const auto st = patterns_.state(p, taxon);
      if (st == SitePatterns::kMissing) continue;
      for (std::size_t c = 0; c < C; ++c) {
        double* v = &out.values[(p * C + c) * S];
        std::fill(v, v + S, 0.0);
        v[st] = 1.0;
      }
    }
    out.valid = true;
    return;
  }
  const auto& pi = model_.freqs;
  for (auto f : tree_.incident(from)) {
    if (f == edge) continue;
    const std::size_t child_node = tree_.other(f, from);
    const Partial& child = partial(f, child_node);
    const double t = tree_.edge(f).length;
    for (std::size_t c = 0; c < C; ++c) {
      const double e = std::exp(-model_.mu * model_.rates[c] * t);
      for (std::size_t p = 0; p < P; ++p) {
        const std::size_t base = (p * C + c) * S;
        const double* in = &child.values[base];
        double* v = &out.values[base];
        double dot = 0.0;
        for (std::size_t i = 0; i < S; ++i) dot += pi[i] * in[i];
        const double rest = (1.0 - e) * dot;
        for (std::size_t i = 0; i < S; ++i) v[i] *= e * in[i] + rest;
        out.scale[p * C + c] += child.scale[p * C + c];
      }
    }
  }
  for (std::size_t k = 0; k < P * C; ++k) {
    double* v = &out.values[k * S];
    const double peak = *std::max_element(v, v + S);
    if (peak > 0.0 && peak < kScaleThreshold) {
      for (std::size_t i = 0; i < S; ++i) v[i] = std::ldexp(v[i], kScaleExponent);
      ++out.scale[k];
    }
  }
  out.valid = true;
}

void LikelihoodEngine::prepare_edge_sums(std::size_t edge) {
  const std::size_t S = model_.size(), C = model_.n_rate_cats(), P = patterns_.size();
  const Partial& a = partial(edge, tree_.edge(edge).a);
  const Partial& b = partial(edge, tree_.edge(edge).b);
  sum_a_.resize(P * C);
  sum_b_.resize(P * C);
  sum_scale_.resize(P * C);
  const auto& pi = model_.freqs;
  for (std::size_t k = 0; k < P * C; ++k) {
    const double* va = &a.values[k * S];
    const double* vb = &b.values[k * S];
    double same = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      same += pi[i] * va[i] * vb[i];
      da += pi[i] * va[i];
      db += pi[i] * vb[i];
    }
    sum_a_[k] = same;
    sum_b_[k] = da * db;
    sum_scale_[k] = a.scale[k] + b.scale[k];
  }
}

double LikelihoodEngine::edge_log_likelihood(std::size_t, double length, std::vector<double>* per_pattern) {
  const std::size_t C = model_.n_rate_cats(), P = patterns_.size();
  const double p_inv = model_.p_inv;
  const double var_weight = (1.0 - p_inv) / static_cast<double>(C);
  double e[16];
  std::vector<double> e_heap;
  double* ec = e;
  if (C > 16) {
    e_heap.resize(C);
    ec = e_heap.data();
  }
  for (std::size_t c = 0; c < C; ++c) ec[c] = std::exp(-model_.mu * model_.rates[c] * length);
  if (per_pattern) per_pattern->assign(P, 0.0);

  double total = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    std::int32_t smin = std::numeric_limits<std::int32_t>::max();
    for (std::size_t c = 0; c < C; ++c) smin = std::min(smin, sum_scale_[p * C + c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t k = p * C + c;
      const double value = ec[c] * sum_a_[k] + (1.0 - ec[c]) * sum_b_[k];
      const std::int32_t shift = sum_scale_[k] - smin;
      sum += shift == 0 ? value : std::ldexp(value, -kScaleExponent * shift);
    }
    const double inv = p_inv * patterns_.invariant_term[p];
    double ll;
    const bool has_var = var_weight * sum > 0.0;
    if (smin == 0) {
      // Unscaled: mix in linear space.
      const double l = var_weight * sum + inv;
      if (!(l > 0.0)) throw NumericalError("site pattern " + std::to_string(p) + " has zero likelihood");
      ll = std::log(l);
    } else if (has_var) {
      ll = std::log(var_weight * sum) - kScaleExponent * std::numbers::ln2 * smin;
      if (inv > 0.0) ll = log_sum_exp(ll, std::log(inv));
    } else if (inv > 0.0) {
      ll = std::log(inv);
    } else {
      throw NumericalError("site pattern " + std::to_string(p) + " has zero likelihood");
    }
    if (!std::isfinite(ll)) throw NumericalError("non-finite site log-likelihood");
    if (per_pattern) (*per_pattern)[p] = ll;
    total += patterns_.weights[p] * ll;
  }
  return total;
}

double LikelihoodEngine::log_likelihood() {
  if (tree_.n_edges() == 0) return evaluate().total_log_likelihood;
  return log_likelihood_at(tree_.incident(tree_.virtual_root()).front());
}

double LikelihoodEngine::log_likelihood_at(std::size_t edge) {
  prepare_edge_sums(edge);
  return edge_log_likelihood(edge, tree_.edge(edge).length, nullptr);
}

LikelihoodResult LikelihoodEngine::evaluate() {
  std::vector<double> per_pattern;
  LikelihoodResult result;
  if (tree_.n_edges() == 0) {
    // A lone taxon: the site likelihood is the stationary probability.
    const std::size_t P = patterns_.size();
    per_pattern.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      const auto st = patterns_.state(p, 0);
      const double var = st == SitePatterns::kMissing ? 1.0 : model_.freqs[st];
      const double l = (1.0 - model_.p_inv) * var + model_.p_inv * patterns_.invariant_term[p];
      if (!(l > 0.0)) throw NumericalError("site pattern has zero likelihood");
      per_pattern[p] = std::log(l);
    }
  } else {
    const std::size_t edge = tree_.incident(tree_.virtual_root()).front();
    prepare_edge_sums(edge);
    edge_log_likelihood(edge, tree_.edge(edge).length, &per_pattern);
  }
  result.per_site_log_likelihoods.resize(patterns_.site_pattern.size());
  // Sum in site order so the total is independent of pattern order.
  for (std::size_t s = 0; s < patterns_.site_pattern.size(); ++s) {
    result.per_site_log_likelihoods[s] = per_pattern[patterns_.site_pattern[s]];
    result.total_log_likelihood += result.per_site_log_likelihoods[s];
  }
  return result;
}

void LikelihoodEngine::set_branch_length(std::size_t edge, double length) {
  if (!(length >= 0.0)) throw DomainError("branch length must be non-negative");
  tree_.set_length(edge, length);
  invalidate_away(edge);
}

double LikelihoodEngine::optimize_branch(std::size_t edge, double tolerance) {
  prepare_edge_sums(edge);
  const double t0 = tree_.edge(edge).length;
  double best_t = t0;
  double best_ll = edge_log_likelihood(edge, t0, nullptr);
  auto consider = [&](double t) {
    const double ll = edge_log_likelihood(edge, t, nullptr);
    if (ll > best_ll) {
      best_ll = ll;
      best_t = t;
    }
  };
  const double lo = std::log(kMinBranchLength), hi = std::log(kMaxBranchLength);
  // Relative precision in log space; tolerance bounds the step in t.
  const int bits = std::clamp(static_cast<int>(-std::log2(std::max(tolerance, 1e-15))), 8, 40);
  std::uintmax_t max_iter = 100;
  const auto [x, fx] = boost::math::tools::brent_find_minima(
      [&](double x) { return -edge_log_likelihood(edge, std::exp(x), nullptr); }, lo, hi, bits, max_iter);
  (void)fx;
  consider(std::clamp(std::exp(x), kMinBranchLength, kMaxBranchLength));
  consider(kMinBranchLength);
  consider(kMaxBranchLength);
  if (best_t != t0) set_branch_length(edge, best_t);
  return best_ll;
}

bool LikelihoodEngine::apply_nni(std::size_t edge, int which) {
  invalidate_away(edge);
  partials_[2 * edge].valid = partials_[2 * edge + 1].valid = false;
  if (!tree_.nni(edge, which)) return false;
  invalidate_away(edge);
  partials_[2 * edge].valid = partials_[2 * edge + 1].valid = false;
  return true;
}

void LikelihoodEngine::restore_near(std::size_t edge, const Phylogeny& saved) {
  invalidate_away(edge);
  partials_[2 * edge].valid = partials_[2 * edge + 1].valid = false;
  tree_ = saved;
  invalidate_away(edge);
  partials_[2 * edge].valid = partials_[2 * edge + 1].valid = false;
}

std::vector<double> LikelihoodEngine::root_vector(std::size_t site, std::size_t category, std::size_t node) {
  const std::size_t S = model_.size(), C = model_.n_rate_cats();
  const std::size_t p = patterns_.site_pattern.at(site);
  const std::size_t k = p * C + category;
  std::vector<double> v(S, 1.0);
  int scale = 0;
  if (leaf_taxon_[node] != kNone) {
    const auto st = patterns_.state(p, leaf_taxon_[node]);
    if (st != SitePatterns::kMissing)
      for (std::size_t i = 0; i < S; ++i) v[i] = i == st ? 1.0 : 0.0;
  }
  for (auto f : tree_.incident(node)) {
    const std::size_t w = tree_.other(f, node);
    const Partial& child = partial(f, w);
    const double* in = &child.values[k * S];
    const double e = std::exp(-model_.mu * model_.rates[category] * tree_.edge(f).length);
    double dot = 0.0;
    for (std::size_t i = 0; i < S; ++i) dot += model_.freqs[i] * in[i];
    for (std::size_t i = 0; i < S; ++i) v[i] *= e * in[i] + (1.0 - e) * dot;
    scale += child.scale[k];
  }
  for (double& x : v) x = std::ldexp(x, -kScaleExponent * scale);
  return v;
}

LikelihoodResult total_log_likelihood(const Phylogeny& tree, const SubstitutionModel& model,
                                      const CharacterMatrix& matrix) {
  LikelihoodEngine engine(tree, model, matrix);
  return engine.evaluate();
}

std::vector<double> site_conditionals(const Phylogeny& tree, const SubstitutionModel& model,
                                      const CharacterMatrix& matrix, std::size_t site, double rate) {
  if (site >= matrix.n_sites()) throw DomainError("site index out of range");
  SubstitutionModel single = model;
  single.rates = {rate};
  LikelihoodEngine engine(tree, single, matrix);
  return engine.root_vector(site, 0, tree.virtual_root());
}

}  // namespace relate
