#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pigec {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure tied to a specific input line (M2, JSONL, CSV readers).
class LineError : public Error {
public:
    LineError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ParseError : public LineError {
public:
    using LineError::LineError;
};

class SchemaError : public LineError {
public:
    using LineError::LineError;
};

class EditMismatchError : public LineError {
public:
    using LineError::LineError;
};

class OverlapError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class UnknownAnnotator : public Error {
public:
    using Error::Error;
};

class NotEnoughExamples : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

// Backend failures. TransportError is retryable, BackendRefusal is not.
class TransportError : public Error {
public:
    using Error::Error;
};

class BackendRefusal : public Error {
public:
    using Error::Error;
};

class NoScriptMatch : public Error {
public:
    using Error::Error;
};

class EmptyCorrection : public Error {
public:
    using Error::Error;
};

}  // namespace pigec
