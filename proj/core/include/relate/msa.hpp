#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "relate/lexdata.hpp"
#include "relate/soundclass.hpp"

namespace relate {

// Gap costs are affine: a run of k gap columns costs gap_open + (k-1)*gap_extend.
// The defaults make it linear.
struct AlignScoring {
  double match = 2.0;
  double mismatch = -1.0;
  double gap_open = -2.0;
  double gap_extend = -2.0;
};

struct PairwiseAlignment {
  std::string a;  // aligned rows over classes and kGap
  std::string b;
  double score = 0.0;
};

// Global alignment. Traceback ties prefer diagonal, then up (gap in b),
// then left (gap in a).
PairwiseAlignment pairwise_align(const ClassSequence& a, const ClassSequence& b,
                                 const AlignScoring& scoring = {});

struct ConceptAlignment {
  std::string meaning;
  std::vector<std::string> rows;  // one per taxon, all of equal width

  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

// Progressive alignment along an average-linkage guide tree. Empty input
// sequences (missing slots) come back as all-gap rows. Returns nullopt when
// every sequence is empty. Throws DomainError for fewer than two sequences.
std::optional<ConceptAlignment> progressive_align(const std::vector<ClassSequence>& seqs,
                                                  const AlignScoring& scoring = {},
                                                  std::string meaning = {});

struct ConceptBlock {
  std::string meaning;
  std::size_t start = 0;  // half-open column range
  std::size_t end = 0;

  bool operator==(const ConceptBlock&) const = default;
};

struct CharacterMatrix {
  std::vector<std::string> taxa;
  std::vector<std::string> rows;  // rows[i][site]
  std::vector<ConceptBlock> concept_bounds;

  std::size_t n_taxa() const { return taxa.size(); }
  std::size_t n_sites() const { return rows.empty() ? 0 : rows.front().size(); }
  char at(std::size_t taxon, std::size_t site) const { return rows[taxon][site]; }

  // Throws DomainError on ragged rows or a taxa/rows size mismatch.
  void validate() const;

  bool operator==(const CharacterMatrix&) const = default;
};

// Concept columns in wordlist order; concepts nobody has are skipped.
// Throws InsufficientDataError when fewer than two languages carry data.
CharacterMatrix build_character_matrix(const Wordlist& wl,
                                       const ClassAlphabet& alphabet = ClassAlphabet::dolgopolsky(),
                                       const AlignScoring& scoring = {},
                                       unsigned threads = 1);

// Relaxed sequential layout: "m N" header, then "name<space>row" lines.
void write_phylip(std::ostream& out, const CharacterMatrix& matrix);
void write_fasta(std::ostream& out, const CharacterMatrix& matrix);
// Reads either layout, detected from the first non-blank character.
CharacterMatrix read_matrix(std::istream& in);

}  // namespace relate
