#pragma once

#include <stdexcept>
#include <string>

namespace ispc {

// Precondition violated by caller-supplied data (bad depth, unknown label, ...).
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed or inconsistent file on disk.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ispc
