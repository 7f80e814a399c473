#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace aggmorph {

// Shortest decimal string that parses back to the same double.
std::string FormatDouble(double value);

// Strict full-string parse; throws kMalformedRecord with `context`.
double ParseDouble(std::string_view text, std::string_view context);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180: CRLF record separators, fields quoted only when needed.
std::string FormatCsv(const CsvTable& table);

// First record becomes the header. Accepts LF or CRLF line endings.
CsvTable ParseCsv(std::string_view text);

std::string ReadFile(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it into place, so the final
// path never holds a partial file.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view content);

}  // namespace aggmorph
