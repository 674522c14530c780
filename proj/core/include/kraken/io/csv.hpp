#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kraken::io {

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Plain comma-separated text without quoting; fields must not contain commas.
CsvTable parse_csv(std::string_view text);

}  // namespace kraken::io
