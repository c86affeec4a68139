#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "relate/lexdata.hpp"
#include "relate/soundclass.hpp"

namespace relate {

// Precomputed word-pair distances keyed by (language, form) on both sides.
// Lookups are symmetric.
class ExternalDistances {
 public:
  void add(std::string lang_a, std::string word_a, std::string lang_b, std::string word_b, double dist);
  // Throws LookupError when the pair is absent.
  double at(std::string_view lang_a, std::string_view word_a, std::string_view lang_b,
            std::string_view word_b) const;
  std::size_t size() const { return table_.size(); }

  // TSV with LANG_A, WORD_A, LANG_B, WORD_B and DIST columns. Distances
  // outside [0, 1] are a ParseError.
  static ExternalDistances from_tsv(std::istream& in);

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  std::map<Key, double, std::less<>> table_;
};

struct WordMetric {
  enum class Kind { P1Dolgo, Turchin, External };
  Kind kind = Kind::P1Dolgo;
  std::shared_ptr<const ExternalDistances> external;

  static WordMetric p1_dolgo() { return {Kind::P1Dolgo, nullptr}; }
  static WordMetric turchin() { return {Kind::Turchin, nullptr}; }
  static WordMetric from_table(ExternalDistances table) {
    return {Kind::External, std::make_shared<const ExternalDistances>(std::move(table))};
  }
};

// "p1dolgo", "turchin" or "external" (case-insensitive); nullopt otherwise.
std::optional<WordMetric::Kind> parse_metric(std::string_view name);
std::string metric_name(WordMetric::Kind kind);

struct Word {
  std::string form;
  ClassSequence classes;
};

// One word per (language, concept) slot, encoded into classes.
struct WordTable {
  std::vector<std::string> languages;
  std::vector<std::string> concepts;
  std::vector<std::vector<std::optional<Word>>> cells;  // [language][concept]

  std::size_t language_index(std::string_view name) const;  // throws LookupError
};

// Throws DomainError if a slot holds more than one form.
WordTable build_word_table(const Wordlist& wl, const ClassAlphabet& alphabet = ClassAlphabet::dolgopolsky());

// Class-only metrics. P1_DOLGO compares the first class, TURCHIN the first
// min(2, |a|, |b|) classes; two empty words are at distance 0 and an empty
// word against a non-empty one at distance 1. EXTERNAL throws DomainError
// here because it needs word forms.
double word_distance(const WordMetric& metric, const ClassSequence& a, const ClassSequence& b);
double word_distance(const WordMetric& metric, std::string_view lang_a, const Word& a, std::string_view lang_b,
                     const Word& b);

// Mean word distance over concepts filled in both languages. Throws
// InsufficientDataError when they share no concept.
double language_distance(const WordMetric& metric, const WordTable& table, std::size_t a, std::size_t b);
double language_distance(const WordMetric& metric, const Wordlist& wl, std::string_view a, std::string_view b);

// Average of language distances over A x B. Sets must be disjoint and
// non-empty.
double cluster_distance(const WordMetric& metric, const WordTable& table, std::span<const std::size_t> a,
                        std::span<const std::size_t> b);

struct Significance {
  double d_hat = 0.0;
  double mean_permuted = 0.0;
  double s_hat = 0.0;
  double p_value = 1.0;
  bool s_undefined = false;  // mean permuted distance was 0
};

// Shuffles every language's words over its filled slots n_perm times and
// compares d(A, B) with the observed value. Replicate r draws from
// substream r of `seed`.
Significance permutation_significance(const WordMetric& metric, const WordTable& table,
                                      std::span<const std::size_t> a, std::span<const std::size_t> b,
                                      int n_perm, std::uint64_t seed, unsigned threads = 1);

// The table as replicate r of permutation_significance sees it, with only
// `languages` shuffled.
WordTable permuted_table(const WordTable& table, std::span<const std::size_t> languages, std::uint64_t seed,
                         std::size_t replicate);

struct Merge {
  std::vector<std::string> a;  // sorted member names
  std::vector<std::string> b;
  Significance stats;
};

struct MergeTree {
  std::vector<Merge> merges;  // in merge order; the last one is the root
  double alpha = 0.05;
  bool related() const { return !merges.empty() && merges.back().stats.p_value < alpha; }
};

// Average-linkage clustering; equal distances go to the lexicographically
// smallest pair of sorted member lists. Merge i tests with seed
// derive_seed(seed, i).
MergeTree run_permtest(const WordMetric& metric, const WordTable& table, int n_perm, std::uint64_t seed,
                       unsigned threads = 1);

// Symmetric matrix of pairwise p-values between single languages; the
// diagonal is NaN.
std::vector<std::vector<double>> pairwise_pvalues(const WordMetric& metric, const WordTable& table, int n_perm,
                                                  std::uint64_t seed, unsigned threads = 1);
void write_pairwise_tsv(std::ostream& out, const std::vector<std::string>& languages,
                        const std::vector<std::vector<double>>& p);

}  // namespace relate
