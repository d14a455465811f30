#pragma once

#include <stdexcept>
#include <string>

namespace rankbed {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (corpus lines, qrels rows, run files).
class ParseError : public Error {
public:
    using Error::Error;
};

/// An invariant or configuration contract was violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Remote scorer gave up after exhausting its retry budget.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_ = 0;
};

/// The provider answered but cannot supply what was asked for
/// (e.g. no logprob data when answer logprobs were required).
class CapabilityError : public Error {
public:
    using Error::Error;
};

}  // namespace rankbed
