#pragma once

#include <stdexcept>
#include <string>

namespace pano {

// Caller violated an input contract (bad dimensions, schema, parameter range).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A linear system could not be solved (rank deficiency, no anchoring).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg, int view = -1)
      : std::runtime_error(msg), view_index(view) {}
  int view_index;  // offending view, -1 when not attributable
};

}  // namespace pano
