#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cqa::detail {

struct XmlElement {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;  // entity-decoded values
  std::uint64_t offset = 0;                                     // byte offset of '<'
};

/// Pull parser yielding start tags (including self-closing ones) in document order.
/// Checks well-formedness as it goes: tag syntax, attribute quoting, entity
/// references, nesting and a single root element. Memory is bounded by one tag
/// plus the open-element stack.
class XmlElementReader {
 public:
  explicit XmlElementReader(std::istream& in);

  /// Next start tag, or std::nullopt at a well-formed end of document.
  /// Throws XmlError on malformed input.
  std::optional<XmlElement> next();

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  int peek();
  int get();
  [[noreturn]] void fail(const std::string& what, std::uint64_t at) const;
  void skip_until(const std::string& terminator, std::uint64_t start);
  std::string read_name();
  void skip_space();

  std::istream& in_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  std::uint64_t offset_ = 0;
  std::vector<std::string> open_;
  bool seen_root_ = false;
  bool root_closed_ = false;
};

}  // namespace cqa::detail
