#pragma once

#include <stdexcept>
#include <string>

namespace modflow {

// Stable error identifiers. The C API exposes these one-to-one, so the set
// and the numeric values are part of the library contract.
enum class ErrorCode : int {
  none = 0,
  invalid_argument = 1,
  io = 2,
  empty_input = 3,
  unknown_atom_symbol = 4,
  aromatic_input_rejected = 5,
  unbalanced_parentheses = 6,
  dangling_ring_bond = 7,
  malformed_input = 8,
  disconnected_graph = 9,
  ring_not_in_vocabulary = 10,
  shape_mismatch = 11,
  non_finite = 12,
  max_steps_exceeded = 13,
  step_underflow = 14,
  version_mismatch = 15,
  checksum_mismatch = 16,
  rank_deficient = 17,
  alphabet_mismatch = 18,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace modflow
