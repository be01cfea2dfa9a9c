#pragma once

#include <stdexcept>
#include <string>

namespace vqtoken {

/// Violated precondition or dimension contract on a public operation.
class ContractError : public std::invalid_argument {
 public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operation called in the wrong order (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  explicit StateError(const std::string& what) : std::logic_error(what) {}
};

/// Binary file format problems. Each failure mode gets its own code so
/// callers (and tests) can tell them apart.
class FormatError : public std::runtime_error {
 public:
  enum class Code {
    kBadMagic,
    kBadVersion,
    kBadDtype,
    kTruncated,
    kDimensionOverflow,
    kCorrupt,
  };

  FormatError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Code code() const { return code_; }

 private:
  Code code_;
};

}  // namespace vqtoken
