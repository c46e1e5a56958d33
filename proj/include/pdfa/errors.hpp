#pragma once

#include <stdexcept>
#include <string>

namespace pdfa {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A token id at or beyond the alphabet size.
struct InvalidTokenError : Error {
    using Error::Error;
};

/// Malformed or invariant-violating input document (JSON automaton, test set).
struct ParseError : Error {
    using Error::Error;
};

/// Invalid configuration value (mu, sample counts, CLI arguments).
struct ConfigError : Error {
    using Error::Error;
};

/// The query source failed: broken pipe, timeout, malformed or out-of-range response.
struct TeacherError : Error {
    using Error::Error;
};

/// Broken internal invariant; indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace pdfa
