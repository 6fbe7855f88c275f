#include "cqa/error.hpp"

namespace cqa {

XmlError::XmlError(const std::string& what, std::uint64_t byte_offset)
    : ParseError(what + " at byte offset " + std::to_string(byte_offset)),
      offset_(byte_offset) {}

}  // namespace cqa
