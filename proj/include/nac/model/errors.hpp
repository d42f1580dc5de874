#pragma once

#include <stdexcept>
#include <string>

namespace nac {

/// Base of every error raised by the library. The service maps each
/// subclass onto an HTTP status class.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad document, unparseable address, failed precondition
/// on caller-supplied data.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

/// The requested state change is not legal from the current state.
class Conflict : public Error {
public:
    using Error::Error;
};

/// Policy or configuration cannot support the requested decision.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An internal invariant was found violated (e.g. two live sessions
/// sharing one address).
class IntegrityError : public Error {
public:
    using Error::Error;
};

} // namespace nac
