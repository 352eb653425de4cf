#pragma once

#include <stdexcept>
#include <string>

namespace sparsedisc {

/// Bad user-supplied parameter (odd n, p > 1/2, malformed rational, ...).
class ParameterError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

/// A request exceeds a configured solver cap or memory budget.
class CapacityError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// An internal invariant failed; indicates a bug or an unsupported input
/// distribution (e.g. a non-log-concave pmf handed to the parity coupling).
class InvariantError : public std::logic_error {
   public:
    using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ParameterError(what);
}

}  // namespace sparsedisc
