#pragma once

#include <stdexcept>
#include <string>

namespace sbsim {

// Precondition violated by the caller (bad radius, zero vector, indivisible partition, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The lattice ball did not contain enough occupied sites; enlarge the generation radius.
class InsufficientSites : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A derived quantity has no value for this input (e.g. T2* of an empty bath).
class UndefinedQuantity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Brute-force oracle asked for a Hilbert space larger than it supports.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace sbsim
