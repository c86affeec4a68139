#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relate {

struct TsvRow {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

// Header-first tab-separated table. Column names are matched
// case-insensitively; fields are kept verbatim (no trimming).
struct TsvTable {
  std::vector<std::string> header;
  std::vector<TsvRow> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  // Throws SchemaError naming the missing column.
  std::size_t require_column(std::string_view name) const;
};

// Accepts LF or CRLF, skips blank lines and strips a UTF-8 BOM. Throws
// EmptyInputError when there is no header and ParseError when a row has a
// different number of fields than the header.
TsvTable read_tsv(std::istream& in, char delimiter = '\t');

std::vector<std::string> split(std::string_view s, char delimiter);

}  // namespace relate
