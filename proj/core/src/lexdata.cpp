#include "relate/lexdata.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <tuple>

#include "relate/error.hpp"
#include "relate/random.hpp"
#include "relate/tsv.hpp"

namespace relate {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::optional<LexFlag> parse_flag(std::string_view name) {
  const std::string n = ascii_lower(trim(name));
  if (n == "loan") return LexFlag::Loan;
  if (n == "onomatopoeia") return LexFlag::Onomatopoeia;
  if (n == "nursery") return LexFlag::Nursery;
  if (n == "short") return LexFlag::Short;
  return std::nullopt;
}

std::size_t Wordlist::language_index(std::string_view name) const {
  auto it = std::find(languages.begin(), languages.end(), name);
  if (it == languages.end()) throw LookupError("unknown language " + std::string(name));
  return static_cast<std::size_t>(it - languages.begin());
}

std::size_t Wordlist::concept_index(std::string_view name) const {
  auto it = std::find(concepts.begin(), concepts.end(), name);
  if (it == concepts.end()) throw LookupError("unknown concept " + std::string(name));
  return static_cast<std::size_t>(it - concepts.begin());
}

std::vector<const LexEntry*> Wordlist::slot(std::string_view language, std::string_view meaning) const {
  std::vector<const LexEntry*> out;
  for (const auto& e : entries)
    if (e.language == language && e.meaning == meaning) out.push_back(&e);
  return out;
}

Wordlist parse_wordlist(std::istream& source, const IngestConfig& config) {
  const TsvTable table = read_tsv(source, config.delimiter);
  const std::size_t lang_col = table.require_column("LANGUAGE");
  const std::size_t concept_col = table.require_column("CONCEPT");
  const std::size_t form_col = table.require_column("FORM");
  const auto seg_col = table.column("SEGMENTS");
  const auto loan_col = table.column("LOAN");
  const auto tag_col = table.column("TAG");
  const auto rank_col = table.column("CORE_RANK");

  Wordlist wl;
  std::set<std::string> seen_lang, seen_concept;
  std::set<std::tuple<std::string, std::string, std::string>> seen_rows;
  std::map<std::tuple<std::string, std::string, unsigned>, std::size_t> seen_ranks;

  for (const auto& row : table.rows) {
    LexEntry e;
    e.language = trim(row.fields[lang_col]);
    e.meaning = trim(row.fields[concept_col]);
    e.form = trim(row.fields[form_col]);
    if (e.language.empty()) throw ParseError("empty LANGUAGE", row.line);
    if (e.meaning.empty()) throw ParseError("empty CONCEPT", row.line);
    if (e.form.empty()) throw ParseError("empty FORM", row.line);

    if (seg_col) {
      const std::string raw = trim(row.fields[*seg_col]);
      if (!raw.empty()) {
        std::vector<std::string> segs;
        for (auto& s : split(raw, ' '))
          if (!s.empty()) segs.push_back(std::move(s));
        e.segments = std::move(segs);
      }
    }
    if (loan_col) {
      const std::string v = trim(row.fields[*loan_col]);
      if (v == "1") e.flags.set(LexFlag::Loan);
      else if (!v.empty() && v != "0") throw ParseError("LOAN must be 0 or 1, got '" + v + "'", row.line);
    }
    if (tag_col) {
      for (const auto& tag : split(row.fields[*tag_col], ',')) {
        if (trim(tag).empty()) continue;
        const auto flag = parse_flag(tag);
        if (!flag) throw ParseError("unknown TAG '" + trim(tag) + "'", row.line);
        e.flags.set(*flag);
      }
    }
    if (rank_col) {
      const std::string v = trim(row.fields[*rank_col]);
      if (!v.empty()) {
        unsigned rank = 0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), rank);
        if (ec != std::errc{} || ptr != v.data() + v.size())
          throw ParseError("CORE_RANK must be a non-negative integer, got '" + v + "'", row.line);
        e.core_rank = rank;
      }
    }

    if (!seen_rows.emplace(e.language, e.meaning, e.form).second) continue;
    if (e.core_rank) {
      const auto key = std::make_tuple(e.language, e.meaning, *e.core_rank);
      if (auto [it, fresh] = seen_ranks.emplace(key, row.line); !fresh)
        throw ParseError("CORE_RANK " + std::to_string(*e.core_rank) + " repeats line " +
                             std::to_string(it->second) + " in slot (" + e.language + ", " + e.meaning + ")",
                         row.line);
    }
    if (seen_lang.insert(e.language).second) wl.languages.push_back(e.language);
    if (seen_concept.insert(e.meaning).second) wl.concepts.push_back(e.meaning);
    wl.entries.push_back(std::move(e));
  }
  if (wl.entries.empty()) throw EmptyInputError("wordlist has a header but no entries");
  return wl;
}

ClassSequence encode_entry(const LexEntry& entry, const ClassAlphabet& alphabet) {
  if (entry.segments) return encode_segments(*entry.segments, entry.form, alphabet);
  return encode_form(entry.form, alphabet);
}

Wordlist filter_forms(const Wordlist& wl, const FilterPolicy& policy, const ClassAlphabet& alphabet) {
  Wordlist out;
  out.languages = wl.languages;
  out.concepts = wl.concepts;
  for (const auto& e : wl.entries) {
    if (policy.drop_loans && e.flags.has(LexFlag::Loan)) continue;
    if (policy.drop_onomatopoeia && e.flags.has(LexFlag::Onomatopoeia)) continue;
    if (policy.drop_nursery && e.flags.has(LexFlag::Nursery)) continue;
    if (policy.drop_short_flagged && e.flags.has(LexFlag::Short)) continue;
    if (policy.min_consonants > 0 && encode_entry(e, alphabet).size() < policy.min_consonants) continue;
    out.entries.push_back(e);
  }
  return out;
}

Wordlist select_core_form(const Wordlist& wl, std::uint64_t rng_seed) {
  // Group entry indices per slot, keeping first-appearance order of slots.
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> slots;
  std::vector<std::pair<std::string, std::string>> order;
  for (std::size_t i = 0; i < wl.entries.size(); ++i) {
    const auto key = std::make_pair(wl.entries[i].language, wl.entries[i].meaning);
    auto [it, fresh] = slots.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(i);
  }

  Wordlist out;
  out.languages = wl.languages;
  out.concepts = wl.concepts;
  for (const auto& key : order) {
    const auto& members = slots.at(key);
    std::vector<std::size_t> best;
    std::optional<unsigned> best_rank;
    for (std::size_t idx : members) {
      const auto& rank = wl.entries[idx].core_rank;
      // Ranked entries beat unranked ones.
      const bool better = rank && (!best_rank || *rank < *best_rank);
      const bool equal = rank == best_rank;
      if (better) {
        best = {idx};
        best_rank = rank;
      } else if (equal) {
        best.push_back(idx);
      }
    }
    std::size_t pick = best.front();
    if (best.size() > 1) {
      // Sort candidates by form so the draw does not depend on row order.
      std::sort(best.begin(), best.end(),
                [&](std::size_t a, std::size_t b) { return wl.entries[a].form < wl.entries[b].form; });
      Rng rng(rng_seed, hash_string(key.first) ^ (hash_string(key.second) * 31));
      pick = best[rng.below(best.size())];
    }
    out.entries.push_back(wl.entries[pick]);
  }
  return out;
}

}  // namespace relate
