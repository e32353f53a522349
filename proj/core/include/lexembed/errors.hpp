#pragma once

#include <stdexcept>
#include <string>

namespace lexembed {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File or stream failure (open, read, write).
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data; message names the offending line or byte offset.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (flag values, relation names, empty lexicon).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside an operation's stated domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Non-finite value encountered in the parameter matrices.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Negative sampling could not produce an admissible word.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Evaluation impossible (too few scorable items, zero rank variance).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace lexembed
