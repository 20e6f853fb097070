#pragma once

#include <stdexcept>
#include <string>

namespace selfguard {

/// Raised for malformed or internally inconsistent scenario input.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An attribute reference that does not resolve against the host.
class UnknownTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mutation whose payload shape does not match its kind, or whose kind
/// cannot be applied to the referenced attribute class.
class InvalidMutation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ReplayDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace selfguard
