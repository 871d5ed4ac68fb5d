#include "cifra/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cifra/errors.hpp"

namespace cifra {

CsvTable readCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CifraError("csv: cannot open \"" + path.string() + "\"");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();

  std::size_t pos = 0;
  if (text.size() >= 3 && text.compare(0, 3, "\xef\xbb\xbf") == 0) pos = 3;

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool any_field = false;

  auto endField = [&] {
    record.push_back(std::move(field));
    field.clear();
    any_field = false;
  };
  auto endRecord = [&] {
    endField();
    if (table.header.empty() && table.rows.empty()) {
      table.header = std::move(record);
    } else {
      table.rows.push_back(std::move(record));
    }
    record.clear();
  };

  while (pos < text.size()) {
    char c = text[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      ++pos;
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !any_field) {
          quoted = true;
          any_field = true;
        } else {
          field += c;  // stray quote inside an unquoted field
        }
        ++pos;
        break;
      case ',':
        endField();
        ++pos;
        break;
      case '\r':
        if (pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
        endRecord();
        ++pos;
        break;
      case '\n':
        endRecord();
        ++pos;
        break;
      default:
        field += c;
        any_field = true;
        ++pos;
        break;
    }
  }
  if (quoted) {
    throw CifraError("csv: unterminated quoted field in \"" + path.string() +
                     "\"");
  }
  if (any_field || !field.empty() || !record.empty()) endRecord();
  return table;
}

std::string csvEscape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csvJoin(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += csvEscape(fields[i]);
  }
  return line;
}

std::string formatDouble(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string formatFixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

}  // namespace cifra
