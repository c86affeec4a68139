#include "relate/tsv.hpp"

#include "relate/error.hpp"
#include "relate/soundclass.hpp"

namespace relate {

std::vector<std::string> split(std::string_view s, char delimiter) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = s.find(delimiter, start);
    if (end == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
}

std::optional<std::size_t> TsvTable::column(std::string_view name) const {
  const std::string wanted = ascii_lower(name);
  for (std::size_t i = 0; i < header.size(); ++i)
    if (ascii_lower(header[i]) == wanted) return i;
  return std::nullopt;
}

std::size_t TsvTable::require_column(std::string_view name) const {
  if (auto idx = column(name)) return *idx;
  throw SchemaError("missing required column " + std::string(name));
}

TsvTable read_tsv(std::istream& in, char delimiter) {
  TsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split(line, delimiter);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    table.rows.push_back({line_no, std::move(fields)});
  }
  if (!have_header) throw EmptyInputError("input is empty");
  return table;
}

}  // namespace relate
