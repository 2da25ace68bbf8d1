#pragma once

#include <stdexcept>
#include <string>

namespace cfn {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (edge-list, Newick, sample files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally invalid objects: bad degrees, cycles, out-of-range parameters.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical precondition was violated, e.g. a denominator fell below its floor.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A size cap (leaf count for exact enumeration) was exceeded.
class CapError : public Error {
 public:
  using Error::Error;
};

}  // namespace cfn
