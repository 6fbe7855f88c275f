#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cqa/matrix.hpp"

namespace cqa::textio {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

/// Strict parse of a full token as a double / integer; throws ParseError naming `what`.
double parse_double(std::string_view token, std::string_view what);
long long parse_int(std::string_view token, std::string_view what);

/// Keyed dense rows, persisted as "<count> <dim>" followed by "<key> v1 ... v_dim" lines.
/// This is the interchange format shared by embeddings, document vectors,
/// centroids and factor matrices.
struct VectorTable {
  std::vector<std::string> keys;
  Matrix values;
};

void write_vector_table(std::ostream& out, const VectorTable& table);
/// Throws ParseError naming the 1-based line number on any shape mismatch.
VectorTable read_vector_table(std::istream& in);

/// One entry per line; blank lines and lines whose first non-space character is '#' are skipped.
/// Entries are trimmed and lowercased.
std::set<std::string> read_word_list(std::istream& in);
std::set<std::string> read_word_list_file(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it over `path` once `fill` returns.
void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& fill);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace cqa::textio
