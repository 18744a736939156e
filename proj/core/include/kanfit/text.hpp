#pragma once

// Small text helpers shared by the file formats (CSV, model, results, manifest).

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace kanfit {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Strict full-string parse (surrounding blanks allowed); throws ParseError
/// naming `what` on failure.
double parse_double(std::string_view text, const std::string& what);
long long parse_int(std::string_view text, const std::string& what);

std::string_view trim(std::string_view s) noexcept;
std::vector<std::string> split(std::string_view s, char sep);

/// Parses `key = value` lines; blank lines and '#' comments are skipped. Throws
/// ParseError with the line number on a line without '=' or a duplicate key.
std::map<std::string, std::string> parse_kv(std::string_view text);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace kanfit
