#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace modnet {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LayoutTypeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SexprParseError : std::runtime_error {
  std::size_t position;
  SexprParseError(const std::string& msg, std::size_t pos)
      : std::runtime_error(msg + " (at position " + std::to_string(pos) + ")"),
        position(pos) {}
};

// Raised by lookup when the lexeme has no known entity position. Distinct
// from an unknown word in find, which is legal (a fresh parameter vector is
// allocated on first use).
struct UnknownEntityLexeme : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace modnet
