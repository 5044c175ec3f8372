#pragma once

#include <stdexcept>
#include <string>

namespace chartloom {

// Root of every error the library throws. Callers that only need to report
// a failure can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition (empty input, wrong role...).
class PreconditionError : public Error {
public:
  using Error::Error;
};

// Bad or missing configuration, unreadable input directories.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Malformed on-disk input (CSV, JSON, YAML).
class ParseError : public Error {
public:
  using Error::Error;
};

// Filesystem failures while writing outputs.
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace chartloom
