#pragma once

#include <stdexcept>
#include <string>

namespace qobs {

// Inconsistent matrix sizes or parity violations in a system description.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An operation was called outside its documented precondition.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The request is well formed but the toolkit does not implement it
// (e.g. Hamiltonian extraction for a degenerate commutation matrix).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gain or covariance synthesis failed numerically (singular DDᵀ, blow-up).
class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vacuum noise cannot absorb the estimator's commutation defect.
class InfeasibleAugmentation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed scenario input; the message names the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qobs
