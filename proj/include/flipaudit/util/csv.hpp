#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flipaudit::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  // Column index by name, or throws InputError naming the file and column.
  std::size_t column(std::string_view name, std::string_view source) const;
};

// RFC 4180-ish: comma separated, optional double quotes with "" escapes, CRLF tolerated.
Table parse(std::string_view text);
Table read_file(const std::filesystem::path& path);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

// Shortest-roundtrip-free, locale-independent formatting with the given
// number of significant digits (%.*g).
std::string format_double(double value, int significant_digits = 12);

double parse_double(std::string_view text, std::string_view what, std::size_t line);
long parse_int(std::string_view text, std::string_view what, std::size_t line);

}  // namespace flipaudit::csv
