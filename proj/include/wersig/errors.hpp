#pragma once

#include <stdexcept>
#include <string>

namespace wersig {

/// Malformed input file content. The message carries the line number when known.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that parsed fine but violates a data-model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A statistic whose denominator is zero (e.g. WER with no reference words).
class UndefinedStatisticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solver contract violation; indicates a bug rather than bad input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace wersig
