#include "relate/permtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "relate/error.hpp"
#include "relate/parallel.hpp"
#include "relate/random.hpp"
#include "relate/tsv.hpp"

namespace relate {

void ExternalDistances::add(std::string lang_a, std::string word_a, std::string lang_b, std::string word_b,
                            double dist) {
  if (!(dist >= 0.0 && dist <= 1.0)) throw DomainError("external distance outside [0, 1]");
  if (std::tie(lang_b, word_b) < std::tie(lang_a, word_a)) {
    std::swap(lang_a, lang_b);
    std::swap(word_a, word_b);
  }
  table_[Key{std::move(lang_a), std::move(word_a), std::move(lang_b), std::move(word_b)}] = dist;
}

double ExternalDistances::at(std::string_view lang_a, std::string_view word_a, std::string_view lang_b,
                             std::string_view word_b) const {
  if (std::tie(lang_b, word_b) < std::tie(lang_a, word_a)) {
    std::swap(lang_a, lang_b);
    std::swap(word_a, word_b);
  }
  const auto it = table_.find(std::make_tuple(lang_a, word_a, lang_b, word_b));
  if (it == table_.end())
    throw LookupError("no external distance for " + std::string(lang_a) + ":" + std::string(word_a) + " / " +
                      std::string(lang_b) + ":" + std::string(word_b));
  return it->second;
}

ExternalDistances ExternalDistances::from_tsv(std::istream& in) {
  const TsvTable t = read_tsv(in);
  const std::size_t la = t.require_column("LANG_A"), wa = t.require_column("WORD_A");
  const std::size_t lb = t.require_column("LANG_B"), wb = t.require_column("WORD_B");
  const std::size_t dc = t.require_column("DIST");
  ExternalDistances out;
  for (const auto& row : t.rows) {
    const std::string& text = row.fields[dc];
    char* end = nullptr;
    const double d = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !(d >= 0.0 && d <= 1.0))
      throw ParseError("DIST must be a number in [0, 1], got '" + text + "'", row.line);
    out.add(row.fields[la], row.fields[wa], row.fields[lb], row.fields[wb], d);
  }
  return out;
}

std::optional<WordMetric::Kind> parse_metric(std::string_view name) {
  const std::string n = ascii_lower(name);
  if (n == "p1dolgo" || n == "p1_dolgo") return WordMetric::Kind::P1Dolgo;
  if (n == "turchin") return WordMetric::Kind::Turchin;
  if (n == "external") return WordMetric::Kind::External;
  return std::nullopt;
}

std::string metric_name(WordMetric::Kind kind) {
  switch (kind) {
    case WordMetric::Kind::P1Dolgo: return "P1_DOLGO";
    case WordMetric::Kind::Turchin: return "TURCHIN";
    case WordMetric::Kind::External: return "EXTERNAL";
  }
  return "?";
}

std::size_t WordTable::language_index(std::string_view name) const {
  const auto it = std::find(languages.begin(), languages.end(), name);
  if (it == languages.end()) throw LookupError("unknown language " + std::string(name));
  return static_cast<std::size_t>(it - languages.begin());
}

WordTable build_word_table(const Wordlist& wl, const ClassAlphabet& alphabet) {
  WordTable table;
  table.languages = wl.languages;
  table.concepts = wl.concepts;
  table.cells.assign(wl.languages.size(), std::vector<std::optional<Word>>(wl.concepts.size()));
  for (const auto& e : wl.entries) {
    auto& cell = table.cells[wl.language_index(e.language)][wl.concept_index(e.meaning)];
    if (cell) throw DomainError("slot (" + e.language + ", " + e.meaning + ") holds more than one form");
    cell = Word{e.form, encode_entry(e, alphabet)};
  }
  return table;
}

double word_distance(const WordMetric& metric, const ClassSequence& a, const ClassSequence& b) {
  switch (metric.kind) {
    case WordMetric::Kind::P1Dolgo:
      if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : 1.0;
      return a[0] == b[0] ? 0.0 : 1.0;
    case WordMetric::Kind::Turchin: {
      const std::size_t k = std::min({std::size_t{2}, a.size(), b.size()});
      if (k == 0) return a.empty() && b.empty() ? 0.0 : 1.0;
      return a.compare(0, k, b, 0, k) == 0 ? 0.0 : 1.0;
    }
    case WordMetric::Kind::External:
      break;
  }
  throw DomainError("the external metric needs word forms");
}

double word_distance(const WordMetric& metric, std::string_view lang_a, const Word& a, std::string_view lang_b,
                     const Word& b) {
  if (metric.kind != WordMetric::Kind::External) return word_distance(metric, a.classes, b.classes);
  if (!metric.external) throw DomainError("external metric without a table");
  return metric.external->at(lang_a, a.form, lang_b, b.form);
}

namespace {

// Word distances between every filled slot of language a and of language b,
// so that permuted language distances reduce to table lookups.
struct PairTable {
  std::vector<std::size_t> shared;  // concepts filled in both
  std::vector<double> dist;         // [slot of a][slot of b], slots index filled concepts
  std::size_t nb = 0;
};

struct Prepared {
  const WordTable* table;
  std::vector<std::vector<std::size_t>> filled;      // per language: filled concept indices
  std::vector<std::vector<std::size_t>> slot_of;     // per language: concept -> filled position
};

Prepared prepare(const WordTable& table) {
  Prepared p{&table, {}, {}};
  for (const auto& row : table.cells) {
    std::vector<std::size_t> filled;
    std::vector<std::size_t> slot(row.size(), SIZE_MAX);
    for (std::size_t c = 0; c < row.size(); ++c)
      if (row[c]) {
        slot[c] = filled.size();
        filled.push_back(c);
      }
    p.filled.push_back(std::move(filled));
    p.slot_of.push_back(std::move(slot));
  }
  return p;
}

PairTable pair_table(const WordMetric& metric, const Prepared& prep, std::size_t a, std::size_t b) {
  const WordTable& t = *prep.table;
  PairTable out;
  for (std::size_t c = 0; c < t.concepts.size(); ++c)
    if (t.cells[a][c] && t.cells[b][c]) out.shared.push_back(c);
  if (out.shared.empty())
    throw InsufficientDataError("languages " + t.languages[a] + " and " + t.languages[b] + " share no concept");
  const auto& fa = prep.filled[a];
  const auto& fb = prep.filled[b];
  out.nb = fb.size();
  out.dist.resize(fa.size() * fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t j = 0; j < fb.size(); ++j)
      out.dist[i * out.nb + j] =
          word_distance(metric, t.languages[a], *t.cells[a][fa[i]], t.languages[b], *t.cells[b][fb[j]]);
  return out;
}

void check_sets(std::span<const std::size_t> a, std::span<const std::size_t> b, std::size_t m) {
  if (a.empty() || b.empty()) throw DomainError("clusters must be non-empty");
  std::set<std::size_t> seen;
  for (auto x : a) {
    if (x >= m) throw DomainError("language index out of range");
    if (!seen.insert(x).second) throw DomainError("duplicate language in cluster");
  }
  for (auto x : b) {
    if (x >= m) throw DomainError("language index out of range");
    if (!seen.insert(x).second) throw DomainError("clusters must be disjoint");
  }
}

}  // namespace

double language_distance(const WordMetric& metric, const WordTable& table, std::size_t a, std::size_t b) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < table.concepts.size(); ++c) {
    const auto& wa = table.cells[a][c];
    const auto& wb = table.cells[b][c];
    if (!wa || !wb) continue;
    sum += word_distance(metric, table.languages[a], *wa, table.languages[b], *wb);
    ++n;
  }
  if (n == 0)
    throw InsufficientDataError("languages " + table.languages[a] + " and " + table.languages[b] +
                                " share no concept");
  return sum / static_cast<double>(n);
}

double language_distance(const WordMetric& metric, const Wordlist& wl, std::string_view a, std::string_view b) {
  const WordTable table = build_word_table(wl);
  return language_distance(metric, table, table.language_index(a), table.language_index(b));
}

double cluster_distance(const WordMetric& metric, const WordTable& table, std::span<const std::size_t> a,
                        std::span<const std::size_t> b) {
  check_sets(a, b, table.languages.size());
  double sum = 0.0;
  for (auto x : a)
    for (auto y : b) sum += language_distance(metric, table, x, y);
  return sum / static_cast<double>(a.size() * b.size());
}

static std::vector<std::vector<std::size_t>> replicate_perm(std::vector<std::vector<std::size_t>> perm,
                                                    const std::vector<std::size_t>& members, std::uint64_t seed,
                                                    std::size_t r) {
  Rng rng(seed, r);
  for (auto x : members) rng.shuffle(std::span<std::size_t>(perm[x]));
  return perm;
}

Significance permutation_significance(const WordMetric& metric, const WordTable& table,
                                      std::span<const std::size_t> a, std::span<const std::size_t> b,
                                      int n_perm, std::uint64_t seed, unsigned threads) {
  if (n_perm < 1) throw DomainError("n_perm must be at least 1");
  check_sets(a, b, table.languages.size());
  const Prepared prep = prepare(table);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<PairTable> tables;
  for (auto x : a)
    for (auto y : b) {
      pairs.emplace_back(x, y);
      tables.push_back(pair_table(metric, prep, x, y));
    }

  // perm[lang][filled position] = filled position whose word now sits there.
  auto distance_under = [&](const std::vector<std::vector<std::size_t>>& perm) {
    double total = 0.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto [x, y] = pairs[k];
      const PairTable& pt = tables[k];
      double sum = 0.0;
      for (auto c : pt.shared) {
        const std::size_t i = perm[x][prep.slot_of[x][c]];
        const std::size_t j = perm[y][prep.slot_of[y][c]];
        sum += pt.dist[i * pt.nb + j];
      }
      total += sum / static_cast<double>(pt.shared.size());
    }
    return total / static_cast<double>(pairs.size());
  };

  std::vector<std::size_t> members(a.begin(), a.end());
  members.insert(members.end(), b.begin(), b.end());
  std::sort(members.begin(), members.end());

  std::vector<std::vector<std::size_t>> identity(table.languages.size());
  for (auto x : members) {
    identity[x].resize(prep.filled[x].size());
    std::iota(identity[x].begin(), identity[x].end(), std::size_t{0});
  }
  Significance out;
  out.d_hat = distance_under(identity);

  std::vector<double> permuted(static_cast<std::size_t>(n_perm));
  parallel_for(permuted.size(), threads, [&](std::size_t r) {
    permuted[r] = distance_under(replicate_perm(identity, members, seed, r));
  });

  out.mean_permuted = std::accumulate(permuted.begin(), permuted.end(), 0.0) / static_cast<double>(n_perm);
  // Tolerance so that exact ties are not lost to summation order.
  const double tol = 1e-12;
  const auto at_most = std::count_if(permuted.begin(), permuted.end(), [&](double d) { return d <= out.d_hat + tol; });
  out.p_value = static_cast<double>(at_most + 1) / static_cast<double>(n_perm + 1);
  if (out.mean_permuted > 0.0) {
    out.s_hat = (out.mean_permuted - out.d_hat) / out.mean_permuted;
  } else {
    out.s_hat = 0.0;
    out.s_undefined = true;
  }
  return out;
}

WordTable permuted_table(const WordTable& table, std::span<const std::size_t> languages, std::uint64_t seed,
                         std::size_t replicate) {
  const Prepared prep = prepare(table);
  std::vector<std::size_t> members(languages.begin(), languages.end());
  std::sort(members.begin(), members.end());
  std::vector<std::vector<std::size_t>> identity(table.languages.size());
  for (auto x : members) {
    if (x >= table.languages.size()) throw DomainError("language index out of range");
    identity[x].resize(prep.filled[x].size());
    std::iota(identity[x].begin(), identity[x].end(), std::size_t{0});
  }
  const auto perm = replicate_perm(identity, members, seed, replicate);
  WordTable out = table;
  for (auto x : members)
    for (std::size_t pos = 0; pos < perm[x].size(); ++pos)
      out.cells[x][prep.filled[x][pos]] = table.cells[x][prep.filled[x][perm[x][pos]]];
  return out;
}

MergeTree run_permtest(const WordMetric& metric, const WordTable& table, int n_perm, std::uint64_t seed,
                       unsigned threads) {
  const std::size_t m = table.languages.size();
  if (m < 2) throw DomainError("clustering needs at least two languages");
  if (n_perm < 1) throw DomainError("n_perm must be at least 1");

  std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) d[i][j] = d[j][i] = language_distance(metric, table, i, j);

  struct Cluster {
    std::vector<std::size_t> members;
    std::vector<std::string> names;  // sorted
  };
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < m; ++i) clusters.push_back({{i}, {table.languages[i]}});

  auto linkage = [&](const Cluster& x, const Cluster& y) {
    double sum = 0.0;
    for (auto i : x.members)
      for (auto j : y.members) sum += d[i][j];
    return sum / static_cast<double>(x.members.size() * y.members.size());
  };

  MergeTree tree;
  while (clusters.size() > 1) {
    std::size_t bi = 0, bj = 1;
    double best = INFINITY;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double v = linkage(clusters[i], clusters[j]);
        auto lo = std::min(clusters[i].names, clusters[j].names);
        auto hi = std::max(clusters[i].names, clusters[j].names);
        const bool better = v < best - 1e-12;
        const bool tie = std::abs(v - best) <= 1e-12;
        if (better || (tie && std::tie(lo, hi) < std::tie(std::min(clusters[bi].names, clusters[bj].names),
                                                          std::max(clusters[bi].names, clusters[bj].names)))) {
          best = better ? v : best;
          bi = i;
          bj = j;
        }
      }
    Cluster& x = clusters[bi];
    Cluster& y = clusters[bj];
    Merge merge;
    merge.a = std::min(x.names, y.names);
    merge.b = std::max(x.names, y.names);
    const bool x_first = x.names <= y.names;
    merge.stats = permutation_significance(metric, table, x_first ? x.members : y.members,
                                           x_first ? y.members : x.members, n_perm,
                                           derive_seed(seed, tree.merges.size()), threads);
    tree.merges.push_back(std::move(merge));

    x.members.insert(x.members.end(), y.members.begin(), y.members.end());
    std::sort(x.members.begin(), x.members.end());
    x.names.insert(x.names.end(), y.names.begin(), y.names.end());
    std::sort(x.names.begin(), x.names.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return tree;
}

std::vector<std::vector<double>> pairwise_pvalues(const WordMetric& metric, const WordTable& table, int n_perm,
                                                  std::uint64_t seed, unsigned threads) {
  const std::size_t m = table.languages.size();
  std::vector<std::vector<double>> p(m, std::vector<double>(m, NAN));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      const std::size_t a[] = {i};
      const std::size_t b[] = {j};
      p[i][j] = p[j][i] =
          permutation_significance(metric, table, a, b, n_perm, derive_seed(seed, i * m + j), threads).p_value;
    }
  return p;
}

void write_pairwise_tsv(std::ostream& out, const std::vector<std::string>& languages,
                        const std::vector<std::vector<double>>& p) {
  out << "LANGUAGE";
  for (const auto& l : languages) out << '\t' << l;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < languages.size(); ++i) {
    out << languages[i];
    for (std::size_t j = 0; j < languages.size(); ++j) {
      if (std::isnan(p[i][j])) {
        out << "\tNA";
      } else {
        std::snprintf(buf, sizeof buf, "%.6g", p[i][j]);
        out << '\t' << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace relate
