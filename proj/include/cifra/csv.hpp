#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cifra {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180-style reader: quoted fields, doubled quotes, embedded commas
// and newlines, CRLF or LF line separators. Strips a UTF-8 BOM. The
// first record is the header. Throws CifraError when the file cannot be
// read or a quoted field is left open.
CsvTable readCsv(const std::filesystem::path& path);

// Quotes a field only when it needs it.
std::string csvEscape(std::string_view field);

std::string csvJoin(const std::vector<std::string>& fields);

// Shortest round-trip decimal form (to_chars); integral values print
// without a trailing ".0". NaN prints as the empty string, matching the
// missing-value convention of the feature table.
std::string formatDouble(double v);

// Fixed two-decimal display form.
std::string formatFixed2(double v);

}  // namespace cifra
