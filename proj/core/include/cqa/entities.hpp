#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cqa {

/// Appends the UTF-8 encoding of `code_point` to `out`.
void append_utf8(std::string& out, std::uint32_t code_point);

/// Decodes the five predefined XML entities plus numeric character references.
/// Returns std::nullopt on an unknown or unterminated reference.
std::optional<std::string> decode_xml_entities(std::string_view text);

/// Lenient HTML decoding: known named and numeric references are decoded,
/// anything unrecognised is copied through verbatim.
std::string decode_html_entities(std::string_view text);

}  // namespace cqa
