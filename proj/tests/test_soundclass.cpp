#include <set>
#include <sstream>

#include "doctest.h"
#include "relate/error.hpp"
#include "relate/soundclass.hpp"

using namespace relate;

namespace {
const ClassAlphabet& dolgo() { return ClassAlphabet::dolgopolsky(); }
}  // namespace

TEST_CASE("tokenize_form") {
  CHECK(tokenize_form("keras", dolgo()) == std::vector<std::string>{"k", "e", "r", "a", "s"});
  CHECK(tokenize_form("bhadra", dolgo()) == std::vector<std::string>{"bh", "a", "d", "r", "a"});
  CHECK_THROWS_AS(tokenize_form("", dolgo()), DomainError);
}

TEST_CASE("encode_form") {
  CHECK(encode_form("keras", dolgo()) == "KRS");
  CHECK(encode_form("horn", dolgo()) == "HRN");
  CHECK(encode_form("aeiou", dolgo()) == "");
  CHECK(encode_form("cornu", dolgo()) == "KRN");
  CHECK(encode_form("HORN", dolgo()) == "HRN");
  CHECK(encode_form("nāma", dolgo()) == "NM");
}

TEST_CASE("unknown segments are errors naming the segment") {
  try {
    encode_form("ka9", dolgo());
    FAIL("expected UnknownSegmentError");
  } catch (const UnknownSegmentError& e) {
    CHECK(e.segment() == "9");
    CHECK(e.form() == "ka9");
  }
}

TEST_CASE("encoding never emits vowels or gaps and never grows") {
  for (const char* form : {"keras", "bhadra", "xšaθra", "tʃaŋgo", "ʔaħad", "wijo"}) {
    const auto seq = encode_form(form, dolgo());
    CHECK(seq.size() <= tokenize_form(form, dolgo()).size());
    CHECK(seq.find(kVowel) == std::string::npos);
    CHECK(seq.find(kGap) == std::string::npos);
    for (char c : seq) CHECK(kDolgoClasses.find(c) != std::string_view::npos);
  }
}

TEST_CASE("default table reaches every class and only classes or markers") {
  std::set<char> seen;
  for (const auto& [segment, cls] : dolgo().segment_map()) {
    CHECK((kDolgoClasses.find(cls) != std::string_view::npos || cls == kVowel || cls == kIgnored));
    seen.insert(cls);
  }
  for (char c : kDolgoClasses) CHECK(seen.count(c) == 1);
  CHECK(seen.count(kVowel) == 1);
}

TEST_CASE("export_extended_alphabet") {
  CHECK(export_extended_alphabet("JR") == "IR");
  CHECK(export_extended_alphabet("KRS") == "KRS");
  CHECK(export_extended_alphabet("") == "");
}

TEST_CASE("custom alphabets") {
  std::istringstream in("SEGMENT\tCLASS\nk\tK\na\tV\nr\tR\n'\t_\n");
  const ClassAlphabet a = ClassAlphabet::from_tsv(in, "KR");
  CHECK(encode_form("ka'ra", a) == "KR");
  CHECK_THROWS_AS(encode_form("kas", a), UnknownSegmentError);
  CHECK_THROWS_AS(ClassAlphabet("KK", {}), DomainError);
  CHECK_THROWS_AS(ClassAlphabet("K-", {}), DomainError);
  CHECK_THROWS_AS(ClassAlphabet("K", {{"p", 'P'}}), DomainError);
  std::istringstream bad("SEGMENT\tCLASS\nk\tQ\n");
  CHECK_THROWS(ClassAlphabet::from_tsv(bad, "KR"));
}
