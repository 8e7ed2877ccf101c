#pragma once

#include <stdexcept>
#include <string>

namespace amloda {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes.
// Every throwing path in the core uses one of these; anything else escaping
// through the C boundary is reported as an internal error.

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad caller input: invalid config values, mismatched lengths, null handles.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Filesystem problems: missing files, unreadable/unwritable paths.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed file contents (CSV rows, JSON documents).
class ParseError : public Error {
public:
    using Error::Error;
};

// Structurally valid input that fails a domain precondition
// (empty trace after cleaning, single-class labels, indivisible frames).
class DataError : public Error {
public:
    using Error::Error;
};

// NaN/Inf encountered or training divergence.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace amloda
