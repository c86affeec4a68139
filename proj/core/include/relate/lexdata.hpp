#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "relate/soundclass.hpp"

namespace relate {

enum class LexFlag : std::uint8_t {
  Loan = 1u << 0,
  Onomatopoeia = 1u << 1,
  Nursery = 1u << 2,
  Short = 1u << 3,
};

class LexFlags {
 public:
  constexpr LexFlags() = default;
  constexpr bool has(LexFlag f) const noexcept { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
  constexpr void set(LexFlag f) noexcept { bits_ |= static_cast<std::uint8_t>(f); }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr bool operator==(const LexFlags&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

// Parses LOAN, ONOMATOPOEIA, NURSERY or SHORT (case-insensitive).
std::optional<LexFlag> parse_flag(std::string_view name);

struct LexEntry {
  std::string language;
  std::string meaning;
  std::string form;
  std::optional<std::vector<std::string>> segments;
  LexFlags flags;
  std::optional<unsigned> core_rank;  // lower is more fundamental

  bool operator==(const LexEntry&) const = default;
};

// Languages and concepts keep first-appearance order from the source; a
// language or concept with no remaining entries is a gap, not an error.
struct Wordlist {
  std::vector<std::string> languages;
  std::vector<std::string> concepts;
  std::vector<LexEntry> entries;

  std::size_t language_index(std::string_view name) const;  // throws LookupError
  std::size_t concept_index(std::string_view name) const;   // throws LookupError

  // entries that fill (language, concept), in source order.
  std::vector<const LexEntry*> slot(std::string_view language, std::string_view meaning) const;

  bool operator==(const Wordlist&) const = default;
};

struct IngestConfig {
  char delimiter = '\t';
};

// Reads a LANGUAGE / CONCEPT / FORM table with optional SEGMENTS, LOAN, TAG
// and CORE_RANK columns. Exact duplicate (language, concept, form) rows are
// collapsed. Throws EmptyInputError, SchemaError or ParseError (with line).
Wordlist parse_wordlist(std::istream& source, const IngestConfig& config = {});

struct FilterPolicy {
  bool drop_loans = true;
  bool drop_onomatopoeia = true;
  bool drop_nursery = true;
  bool drop_short_flagged = true;
  // Entries whose consonant-class encoding is shorter than this are removed.
  // Zero disables the length rule.
  std::size_t min_consonants = 2;

  static FilterPolicy keep_all() { return {false, false, false, false, 0}; }
};

// Output entries are a subset of the input in the same order.
Wordlist filter_forms(const Wordlist& wl, const FilterPolicy& policy,
                      const ClassAlphabet& alphabet = ClassAlphabet::dolgopolsky());

// Keeps one entry per non-empty slot: lowest core_rank first, remaining ties
// broken by a uniform draw keyed on (seed, language, concept).
Wordlist select_core_form(const Wordlist& wl, std::uint64_t rng_seed);

// Convenience: the encoding of an entry, honouring explicit segments.
ClassSequence encode_entry(const LexEntry& entry, const ClassAlphabet& alphabet);

}  // namespace relate
