#pragma once

#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relate {

// A word reduced to its consonant classes, one char per class symbol.
// Never contains vowels or gaps; may be empty.
using ClassSequence = std::string;

inline constexpr char kGap = '-';
inline constexpr char kVowel = 'V';
inline constexpr char kIgnored = '_';

// The ten consonant classes used by default, in canonical order.
inline constexpr std::string_view kDolgoClasses = "PTSKMNRWJH";

// Segment inventory mapped onto consonant classes.
//
// Each mapped value is a class symbol, kVowel (dropped on encoding) or
// kIgnored (stress/length marks and word separators, dropped silently).
class ClassAlphabet {
 public:
  using SegmentMap = std::map<std::string, char, std::less<>>;

  // Throws DomainError when a class repeats, a class collides with the gap,
  // vowel or ignore markers, or a mapped value is not one of the classes.
  ClassAlphabet(std::string classes, SegmentMap segment_map);

  // Ten Dolgopolsky-style classes with the built-in segment table.
  static const ClassAlphabet& dolgopolsky();

  // Mapping file: TSV with a SEGMENT and CLASS header; CLASS is a class
  // symbol, V for vowels or _ for ignorable marks. Classes are taken from
  // `classes`, which defaults to the ten Dolgopolsky classes.
  static ClassAlphabet from_tsv(std::istream& in, std::string classes = std::string(kDolgoClasses));

  const std::string& classes() const noexcept { return classes_; }
  const SegmentMap& segment_map() const noexcept { return map_; }
  char gap_symbol() const noexcept { return kGap; }
  std::size_t max_segment_bytes() const noexcept { return max_key_; }

  // Returns 0 when the segment has no mapping.
  char lookup(std::string_view segment) const;

 private:
  std::string classes_;
  SegmentMap map_;
  std::size_t max_key_ = 0;
};

// Greedy longest-match segmentation. Matching runs over grapheme units (a
// code point plus any combining marks). Unknown units come back as their own
// segments. Throws DomainError on an empty form.
std::vector<std::string> tokenize_form(std::string_view form, const ClassAlphabet& alphabet);

// Tokenize, map and drop vowels. Throws UnknownSegmentError.
ClassSequence encode_form(std::string_view form, const ClassAlphabet& alphabet);

// Same as encode_form for a form that is already segmented.
ClassSequence encode_segments(const std::vector<std::string>& segments, std::string_view form,
                              const ClassAlphabet& alphabet);

// Amino-acid compatible export: J becomes I.
ClassSequence export_extended_alphabet(const ClassSequence& seq);

// Lowercases ASCII letters; other bytes are passed through.
std::string ascii_lower(std::string_view s);

}  // namespace relate
