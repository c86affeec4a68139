#include <functional>
#include <sstream>

#include "doctest.h"
#include "relate/error.hpp"
#include "relate/lexdata.hpp"
#include "relate/msa.hpp"

using namespace relate;

namespace {

double column_score(char a, char b, const AlignScoring& s) {
  if (a == kGap || b == kGap) return s.gap_extend;
  return a == b ? s.match : s.mismatch;
}

// Best global alignment score by enumerating every alignment (linear gaps).
double exhaustive_best(const std::string& a, const std::string& b, const AlignScoring& s) {
  std::function<double(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> double {
    if (i == a.size() && j == b.size()) return 0.0;
    double best = -1e300;
    if (i < a.size() && j < b.size()) best = std::max(best, column_score(a[i], b[j], s) + go(i + 1, j + 1));
    if (i < a.size()) best = std::max(best, s.gap_extend + go(i + 1, j));
    if (j < b.size()) best = std::max(best, s.gap_extend + go(i, j + 1));
    return best;
  };
  return go(0, 0);
}

double score_of(const PairwiseAlignment& p, const AlignScoring& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.a.size(); ++i) total += column_score(p.a[i], p.b[i], s);
  return total;
}

std::string strip(const std::string& row) {
  std::string out;
  for (char c : row)
    if (c != kGap) out += c;
  return out;
}

}  // namespace

TEST_CASE("pairwise_align examples") {
  const AlignScoring s;
  auto id = pairwise_align("KRN", "KRN", s);
  CHECK(id.a == "KRN");
  CHECK(id.score == doctest::Approx(6.0));
  auto mm = pairwise_align("KRS", "KRN", s);
  CHECK(mm.a == "KRS");
  CHECK(mm.b == "KRN");
  CHECK(mm.score == doctest::Approx(exhaustive_best("KRS", "KRN", s)));
  auto empty = pairwise_align("", "K", s);
  CHECK(empty.a == "-");
  CHECK(empty.b == "K");
  CHECK(empty.score == doctest::Approx(-2.0));
}

TEST_CASE("pairwise_align matches exhaustive enumeration up to length 4") {
  const AlignScoring s;
  const std::string alphabet = "KRS";
  std::vector<std::string> words{""};
  for (int len = 1; len <= 3; ++len) {
    std::vector<std::string> next;
    for (const auto& w : words)
      if (static_cast<int>(w.size()) == len - 1)
        for (char c : alphabet) next.push_back(w + c);
    words.insert(words.end(), next.begin(), next.end());
  }
  words.push_back("KRSK");
  words.push_back("SRNK");
  for (const auto& a : words)
    for (const auto& b : words) {
      const auto p = pairwise_align(a, b, s);
      REQUIRE(p.a.size() == p.b.size());
      CHECK(strip(p.a) == a);
      CHECK(strip(p.b) == b);
      CHECK(p.score == doctest::Approx(exhaustive_best(a, b, s)));
      CHECK(score_of(p, s) == doctest::Approx(p.score));
    }
}

TEST_CASE("affine gaps charge open once per run") {
  AlignScoring s;
  s.gap_open = -5;
  s.gap_extend = -1;
  const auto p = pairwise_align("KRRRS", "KS", s);
  CHECK(p.score == doctest::Approx(2 + 2 - 5 - 1 - 1));
}

TEST_CASE("progressive_align") {
  SUBCASE("identical sequences") {
    const auto a = progressive_align({"KRN", "KRN", "KRN", "KRN"});
    REQUIRE(a);
    CHECK(a->width() == 3);
    for (const auto& r : a->rows) CHECK(r == "KRN");
  }
  SUBCASE("horn-like set keeps R aligned") {
    const std::vector<ClassSequence> seqs{"KRS", "KRN", "HRN", "SRNK"};
    const auto a = progressive_align(seqs);
    REQUIRE(a);
    CHECK(a->width() >= 4);
    bool r_column = false;
    for (std::size_t c = 0; c < a->width(); ++c) {
      bool all_r = true;
      for (const auto& row : a->rows) all_r = all_r && row[c] == 'R';
      r_column = r_column || all_r;
    }
    CHECK(r_column);
    for (std::size_t i = 0; i < seqs.size(); ++i) CHECK(strip(a->rows[i]) == seqs[i]);
  }
  SUBCASE("missing slot becomes a gap row") {
    const auto a = progressive_align({"KR", "", "KR"});
    REQUIRE(a);
    CHECK(a->rows[1] == "--");
  }
  SUBCASE("all empty is skipped, fewer than two is an error") {
    CHECK_FALSE(progressive_align({"", ""}).has_value());
    CHECK_THROWS_AS(progressive_align({"KR"}), DomainError);
  }
  SUBCASE("no all-gap columns and round trip on a larger set") {
    const std::vector<ClassSequence> seqs{"PTKR", "PKR", "TKRS", "", "MNR", "PTK", "SRNK"};
    const auto a = progressive_align(seqs);
    REQUIRE(a);
    for (std::size_t c = 0; c < a->width(); ++c) {
      bool all_gap = true;
      for (const auto& row : a->rows) all_gap = all_gap && row[c] == kGap;
      CHECK_FALSE(all_gap);
    }
    for (std::size_t i = 0; i < seqs.size(); ++i) CHECK(strip(a->rows[i]) == seqs[i]);
    CHECK(progressive_align(seqs)->rows == a->rows);
  }
}

namespace {

Wordlist wordlist(const std::string& text) {
  std::istringstream in(text);
  return parse_wordlist(in);
}

}  // namespace

TEST_CASE("build_character_matrix") {
  const Wordlist wl = wordlist(
      "LANGUAGE\tCONCEPT\tFORM\n"
      "Greek\thorn\tkeras\nLatin\thorn\tcornu\nEnglish\thorn\thorn\nGerman\thorn\thorn\n"
      "Greek\tname\tonoma\nLatin\tname\tnomen\nEnglish\tname\tname\n");
  const CharacterMatrix m = build_character_matrix(wl);
  CHECK(m.taxa == wl.languages);
  REQUIRE(m.concept_bounds.size() == 2);
  CHECK(m.concept_bounds[0].start == 0);
  CHECK(m.concept_bounds[0].end == m.concept_bounds[1].start);
  CHECK(m.concept_bounds[1].end == m.n_sites());
  // German lacks "name": its block is all gaps.
  for (std::size_t s = m.concept_bounds[1].start; s < m.concept_bounds[1].end; ++s) CHECK(m.at(3, s) == kGap);
  // Gap-stripping round trip per block.
  const auto& alphabet = ClassAlphabet::dolgopolsky();
  for (const auto& e : wl.entries) {
    const std::size_t t = wl.language_index(e.language);
    const std::size_t c = wl.concept_index(e.meaning);
    const auto& b = m.concept_bounds[c];
    CHECK(strip(m.rows[t].substr(b.start, b.end - b.start)) == encode_form(e.form, alphabet));
  }
  CHECK(build_character_matrix(wl) == m);
}

TEST_CASE("build_character_matrix errors") {
  CHECK_THROWS_AS(build_character_matrix(wordlist("LANGUAGE\tCONCEPT\tFORM\nA\tx\tkara\n")), InsufficientDataError);
  CHECK_THROWS_AS(build_character_matrix(wordlist("LANGUAGE\tCONCEPT\tFORM\nA\tx\taa\nB\tx\tee\n")),
                  InsufficientDataError);
  CHECK_THROWS_AS(build_character_matrix(wordlist("LANGUAGE\tCONCEPT\tFORM\nA\tx\tkara\nA\tx\tkoro\nB\tx\tka\n")),
                  DomainError);
}

TEST_CASE("matrix text round trips") {
  CharacterMatrix m;
  m.taxa = {"Alpha", "Beta"};
  m.rows = {"KR-S", "-RNK"};
  std::ostringstream phy, fa;
  write_phylip(phy, m);
  write_fasta(fa, m);
  std::istringstream p(phy.str()), f(fa.str());
  const CharacterMatrix a = read_matrix(p);
  const CharacterMatrix b = read_matrix(f);
  CHECK(a.taxa == m.taxa);
  CHECK(a.rows == m.rows);
  CHECK(b.rows == m.rows);
  CharacterMatrix bad = m;
  bad.taxa[0] = "has space";
  std::ostringstream o;
  CHECK_THROWS(write_phylip(o, bad));
}
