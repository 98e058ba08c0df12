#pragma once

#include <stdexcept>
#include <string>

namespace reqqa {

/// Base for every failure raised by the library. The CLI maps these to
/// exit code 1; anything else is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (k < 1, empty gold answer...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data is malformed or references something that does not exist.
class DataError : public Error {
public:
    using Error::Error;
};

/// A required resource (corpus, index file, plugin process) is unavailable.
class ResourceError : public Error {
public:
    using Error::Error;
};

}  // namespace reqqa
