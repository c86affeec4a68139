#include "relate/soundclass.hpp"

#include <sstream>

#include "dolgo_table.hpp"
#include "relate/error.hpp"
#include "relate/tsv.hpp"

namespace relate {
namespace {

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

char32_t decode_at(std::string_view s, std::size_t pos, std::size_t len) {
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[pos + i]); };
  switch (len) {
    case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
    case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
    case 4:
      return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
    default: return b(0);
  }
}

bool is_combining(char32_t cp) {
  return (cp >= 0x0300 && cp <= 0x036F) || (cp >= 0x1AB0 && cp <= 0x1AFF) ||
         (cp >= 0x1DC0 && cp <= 0x1DFF) || (cp >= 0x20D0 && cp <= 0x20FF) ||
         (cp >= 0xFE20 && cp <= 0xFE2F);
}

// Split into grapheme-like units: one base code point plus trailing marks.
std::vector<std::string_view> units_of(std::string_view s) {
  std::vector<std::string_view> units;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t start = pos;
    std::size_t len = std::min(utf8_length(static_cast<unsigned char>(s[pos])), s.size() - pos);
    pos += len;
    while (pos < s.size()) {
      const std::size_t next = std::min(utf8_length(static_cast<unsigned char>(s[pos])), s.size() - pos);
      if (!is_combining(decode_at(s, pos, next))) break;
      pos += next;
    }
    units.push_back(s.substr(start, pos - start));
  }
  return units;
}

std::string strip_marks(std::string_view unit) {
  std::string out;
  std::size_t pos = 0;
  while (pos < unit.size()) {
    const std::size_t len = std::min(utf8_length(static_cast<unsigned char>(unit[pos])), unit.size() - pos);
    if (!is_combining(decode_at(unit, pos, len))) out.append(unit.substr(pos, len));
    pos += len;
  }
  return out;
}

}  // namespace

ClassAlphabet::ClassAlphabet(std::string classes, SegmentMap segment_map)
    : classes_(std::move(classes)), map_(std::move(segment_map)) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const char c = classes_[i];
    if (c == kGap || c == kVowel || c == kIgnored)
      throw DomainError(std::string("class symbol '") + c + "' is reserved");
    if (classes_.find(c, i + 1) != std::string::npos)
      throw DomainError(std::string("duplicate class symbol '") + c + "'");
  }
  for (const auto& [segment, cls] : map_) {
    if (segment.empty()) throw DomainError("empty segment in class mapping");
    if (cls != kVowel && cls != kIgnored && classes_.find(cls) == std::string::npos)
      throw DomainError("segment '" + segment + "' maps to unknown class '" + std::string(1, cls) + "'");
    max_key_ = std::max(max_key_, segment.size());
  }
}

const ClassAlphabet& ClassAlphabet::dolgopolsky() {
  static const ClassAlphabet alphabet = [] {
    std::istringstream in(detail::kDolgoTable);
    return from_tsv(in);
  }();
  return alphabet;
}

ClassAlphabet ClassAlphabet::from_tsv(std::istream& in, std::string classes) {
  const TsvTable table = read_tsv(in);
  const std::size_t seg_col = table.require_column("SEGMENT");
  const std::size_t cls_col = table.require_column("CLASS");
  SegmentMap map;
  for (const auto& row : table.rows) {
    const std::string& segment = row.fields[seg_col];
    const std::string& cls = row.fields[cls_col];
    if (cls.size() != 1) throw ParseError("CLASS must be a single symbol, got '" + cls + "'", row.line);
    if (!map.emplace(segment, cls[0]).second)
      throw ParseError("duplicate segment '" + segment + "'", row.line);
  }
  return ClassAlphabet(std::move(classes), std::move(map));
}

char ClassAlphabet::lookup(std::string_view segment) const {
  if (auto it = map_.find(segment); it != map_.end()) return it->second;
  return 0;
}

std::vector<std::string> tokenize_form(std::string_view form, const ClassAlphabet& alphabet) {
  if (form.empty()) throw DomainError("cannot tokenize an empty form");
  const auto units = units_of(form);
  std::vector<std::string> segments;
  std::size_t i = 0;
  while (i < units.size()) {
    std::size_t best = 0;
    std::size_t bytes = 0;
    for (std::size_t k = 1; i + k <= units.size(); ++k) {
      bytes += units[i + k - 1].size();
      if (bytes > alphabet.max_segment_bytes()) break;
      const std::string_view candidate(units[i].data(), bytes);
      if (alphabet.lookup(candidate) != 0) best = k;
    }
    if (best == 0) best = 1;
    std::size_t len = 0;
    for (std::size_t k = 0; k < best; ++k) len += units[i + k].size();
    segments.emplace_back(units[i].data(), len);
    i += best;
  }
  return segments;
}

ClassSequence encode_segments(const std::vector<std::string>& segments, std::string_view form,
                              const ClassAlphabet& alphabet) {
  ClassSequence out;
  for (const auto& segment : segments) {
    char cls = alphabet.lookup(segment);
    if (cls == 0) cls = alphabet.lookup(strip_marks(segment));
    if (cls == 0) throw UnknownSegmentError(segment, std::string(form));
    if (cls == kVowel || cls == kIgnored) continue;
    out.push_back(cls);
  }
  return out;
}

ClassSequence encode_form(std::string_view form, const ClassAlphabet& alphabet) {
  const std::string lowered = ascii_lower(form);
  return encode_segments(tokenize_form(lowered, alphabet), form, alphabet);
}

ClassSequence export_extended_alphabet(const ClassSequence& seq) {
  ClassSequence out = seq;
  for (char& c : out)
    if (c == 'J') c = 'I';
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

}  // namespace relate
