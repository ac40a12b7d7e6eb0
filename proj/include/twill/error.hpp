#pragma once

#include <stdexcept>
#include <string>

namespace twill {

// Input could not be parsed at all (malformed JSON, missing required key).
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Input parsed but violates a domain invariant. The message names the field.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class DvfsUnsupported : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class LevelOutOfRange : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

// A decision that is not legal in the current simulation state.
class IllegalDecision : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The simulation cannot make progress: work remains but nothing can run.
class DeadlockError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace twill
