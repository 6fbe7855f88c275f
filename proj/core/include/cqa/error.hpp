#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cqa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input (XML dump, corpus file, vector file, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// XML well-formedness failure, located by byte offset into the stream.
class XmlError : public ParseError {
 public:
  XmlError(const std::string& what, std::uint64_t byte_offset);
  std::uint64_t byte_offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A precondition on arguments was violated (k out of range, lambda outside [0,1], ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace cqa
