#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace lcval::csv {

// A parsed CSV document. Fields are unquoted; `line` holds the 1-based
// source line of each record for diagnostics.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;

  // Index of a header column; throws kParse when absent.
  std::size_t column(std::string_view name) const;
};

// RFC 4180 subset: comma separator, double-quote quoting, LF or CRLF.
// Every record must have as many fields as the header.
Table parse(std::string_view text);

// Throws kParse if the header differs from `expected`.
void require_header(const Table& table, const std::vector<std::string>& expected);

std::string escape(std::string_view field);
std::string join(const std::vector<std::string>& fields);

std::string format_double(double value);
double parse_double(std::string_view field, std::size_t line);
std::int64_t parse_int(std::string_view field, std::size_t line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace lcval::csv
