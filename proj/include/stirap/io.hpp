#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stirap::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string trim(std::string_view s);
/// Splits one CSV record; surrounding double quotes on a field are removed.
std::vector<std::string> split_csv(std::string_view line);

struct CsvTable {
  std::vector<std::string> header;
  struct Row {
    int line = 0;  // 1-based line number in the source file
    std::vector<std::string> fields;
  };
  std::vector<Row> rows;

  /// Index of a header column, or -1.
  int column(std::string_view name) const;
};

/// Blank lines and lines starting with '#' are skipped; the first remaining line is the header.
CsvTable parse_csv(std::string_view text);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace stirap::io
