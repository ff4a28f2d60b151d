#pragma once

#include <stdexcept>
#include <string>

namespace scop {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad or missing configuration (file, flag, or manifest field).
struct ConfigError : Error {
    using Error::Error;
};

/// Input data violates a documented invariant.
struct ValidationError : Error {
    using Error::Error;
};

/// Filesystem failure (open, write, rename).
struct IoError : Error {
    using Error::Error;
};

/// Completion provider failure after retries are exhausted.
struct ProviderError : Error {
    using Error::Error;
};

/// Sample cache is unreadable or malformed.
struct CacheError : Error {
    using Error::Error;
};

/// Concurrent-use violation, e.g. a run directory already locked.
struct StateError : Error {
    using Error::Error;
};

} // namespace scop
