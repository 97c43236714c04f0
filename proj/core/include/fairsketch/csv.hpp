#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fairsketch::csv {

/// Parsed CSV contents: first record is the header, remaining records are
/// data rows. `line_numbers[i]` is the physical 1-based line where row i
/// starts (quoted fields may span lines).
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::optional<std::size_t> column(const std::string& name) const;
};

/// RFC-4180 subset: comma delimiter, double-quoted fields with "" escapes,
/// CRLF or LF line endings, header row required.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

/// Quotes a field only when it contains a comma, quote, or newline.
std::string escape(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace fairsketch::csv
