#include "cqa/textio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "cqa/error.hpp"

namespace cqa::textio {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view token, std::string_view what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
    throw ParseError("invalid number '" + std::string(token) + "' for " + std::string(what));
  return v;
}

long long parse_int(std::string_view token, std::string_view what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty())
    throw ParseError("invalid integer '" + std::string(token) + "' for " + std::string(what));
  return v;
}

void write_vector_table(std::ostream& out, const VectorTable& table) {
  out << table.keys.size() << ' ' << table.values.cols() << '\n';
  for (std::size_t i = 0; i < table.keys.size(); ++i) {
    out << table.keys[i];
    for (double v : table.values.row(i)) out << ' ' << format_double(v);
    out << '\n';
  }
}

namespace {

std::vector<std::string_view> fields_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

VectorTable read_vector_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("vector file is empty");
  auto header = fields_of(line);
  if (header.size() != 2) throw ParseError("line 1: expected '<count> <dim>' header");
  const long long count = parse_int(header[0], "line 1 count");
  const long long dim = parse_int(header[1], "line 1 dim");
  if (count < 0 || dim <= 0) throw ParseError("line 1: count must be >= 0 and dim > 0");

  VectorTable table;
  table.keys.reserve(static_cast<std::size_t>(count));
  table.values = Matrix(static_cast<std::size_t>(count), static_cast<std::size_t>(dim));
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = fields_of(line);
    if (fields.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != static_cast<std::size_t>(dim) + 1)
      throw ParseError(where + ": expected " + std::to_string(dim) + " values, found " +
                       std::to_string(fields.size() - 1));
    if (row >= static_cast<std::size_t>(count))
      throw ParseError(where + ": more rows than the header count " + std::to_string(count));
    table.keys.emplace_back(fields[0]);
    for (std::size_t c = 0; c < static_cast<std::size_t>(dim); ++c)
      table.values(row, c) = parse_double(fields[c + 1], where);
    ++row;
  }
  if (row != static_cast<std::size_t>(count))
    throw ParseError("truncated vector file: header declares " + std::to_string(count) +
                     " rows, found " + std::to_string(row));
  return table;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::set<std::string> read_word_list(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.insert(std::move(w));
  }
  return words;
}

std::set<std::string> read_word_list_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_word_list(in);
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& fill) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    try {
      fill(out);
    } catch (...) {
      out.close();
      fs::remove(tmp);
      throw;
    }
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

}  // namespace cqa::textio
