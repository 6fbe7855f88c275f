#include "xml_reader.hpp"

#include <cctype>

#include "cqa/entities.hpp"
#include "cqa/error.hpp"

namespace cqa::detail {

namespace {

constexpr std::size_t kBufferSize = 1 << 16;

bool is_name_start(int c) { return std::isalpha(c) || c == '_' || c == ':' || c >= 0x80; }
bool is_name_char(int c) {
  return is_name_start(c) || std::isdigit(c) || c == '-' || c == '.';
}
bool is_space(int c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

}  // namespace

XmlElementReader::XmlElementReader(std::istream& in) : in_(in), buf_(kBufferSize) {}

int XmlElementReader::peek() {
  if (pos_ == len_) {
    in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    len_ = static_cast<std::size_t>(in_.gcount());
    pos_ = 0;
    if (len_ == 0) return -1;
  }
  return static_cast<unsigned char>(buf_[pos_]);
}

int XmlElementReader::get() {
  const int c = peek();
  if (c >= 0) {
    ++pos_;
    ++offset_;
  }
  return c;
}

void XmlElementReader::fail(const std::string& what, std::uint64_t at) const {
  throw XmlError("malformed XML: " + what, at);
}

void XmlElementReader::skip_until(const std::string& terminator, std::uint64_t start) {
  std::size_t matched = 0;
  while (matched < terminator.size()) {
    const int c = get();
    if (c < 0) fail("unterminated construct, expected '" + terminator + "'", start);
    if (c == terminator[matched]) {
      ++matched;
    } else {
      matched = (c == terminator[0]) ? 1 : 0;
    }
  }
}

std::string XmlElementReader::read_name() {
  std::string name;
  if (!is_name_start(peek())) fail("expected a name", offset_);
  while (is_name_char(peek())) name.push_back(static_cast<char>(get()));
  return name;
}

void XmlElementReader::skip_space() {
  while (is_space(peek())) get();
}

std::optional<XmlElement> XmlElementReader::next() {
  while (true) {
    const int c = peek();
    if (c < 0) {
      if (!open_.empty()) fail("unexpected end of document inside <" + open_.back() + ">", offset_);
      if (!seen_root_) fail("no root element", offset_);
      return std::nullopt;
    }
    if (c != '<') {
      const std::uint64_t at = offset_;
      get();
      if (open_.empty() && !is_space(c)) fail("text outside the root element", at);
      if (c == '&') {
        // Validate the reference; text content itself is not needed.
        std::string ref = "&";
        while (peek() >= 0 && peek() != ';' && ref.size() < 12) ref.push_back(static_cast<char>(get()));
        if (get() != ';' || !decode_xml_entities(ref + ";")) fail("bad entity reference", at);
      }
      continue;
    }

    const std::uint64_t start = offset_;
    get();  // '<'
    const int n = peek();
    if (n == '?') {
      skip_until("?>", start);
      continue;
    }
    if (n == '!') {
      get();
      if (peek() == '-') {
        get();
        if (get() != '-') fail("bad comment opener", start);
        skip_until("-->", start);
      } else if (peek() == '[') {
        skip_until("]]>", start);
      } else {
        skip_until(">", start);  // DOCTYPE without internal subset
      }
      continue;
    }
    if (n == '/') {
      get();
      std::string name = read_name();
      skip_space();
      if (get() != '>') fail("expected '>' to close </" + name + ">", start);
      if (open_.empty() || open_.back() != name)
        fail("mismatched end tag </" + name + ">", start);
      open_.pop_back();
      if (open_.empty()) root_closed_ = true;
      continue;
    }

    XmlElement element;
    element.offset = start;
    element.name = read_name();
    if (open_.empty() && root_closed_) fail("second root element <" + element.name + ">", start);
    while (true) {
      const bool had_space = is_space(peek());
      skip_space();
      const int p = peek();
      if (p < 0) fail("unterminated tag <" + element.name + ">", start);
      if (p == '/') {
        get();
        if (get() != '>') fail("expected '>' after '/'", start);
        if (open_.empty()) {
          seen_root_ = true;
          root_closed_ = true;
        }
        return element;
      }
      if (p == '>') {
        get();
        seen_root_ = true;
        open_.push_back(element.name);
        return element;
      }
      if (!had_space) fail("expected whitespace before attribute", offset_);
      std::string attr = read_name();
      skip_space();
      if (get() != '=') fail("expected '=' after attribute " + attr, offset_);
      skip_space();
      const int quote = get();
      if (quote != '"' && quote != '\'') fail("attribute " + attr + " value must be quoted", offset_);
      const std::uint64_t value_start = offset_;
      std::string raw;
      while (true) {
        const int v = get();
        if (v < 0) fail("unterminated attribute value", value_start);
        if (v == quote) break;
        if (v == '<') fail("'<' inside attribute value", offset_ - 1);
        raw.push_back(static_cast<char>(v));
      }
      auto decoded = decode_xml_entities(raw);
      if (!decoded) fail("bad entity reference in attribute " + attr, value_start);
      for (const auto& [existing, _] : element.attributes)
        if (existing == attr) fail("duplicate attribute " + attr, start);
      element.attributes.emplace_back(std::move(attr), std::move(*decoded));
    }
  }
}

}  // namespace cqa::detail
