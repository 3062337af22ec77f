#pragma once

#include <stdexcept>

namespace grfest {

/// Thrown when an argument violates a documented precondition
/// (dimension mismatch, unknown identifier, invalid parameter).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace grfest
