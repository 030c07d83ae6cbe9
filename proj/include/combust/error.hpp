#pragma once

#include <stdexcept>
#include <string>

namespace combust {

/// Base class of all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad parameters, inadmissible end states, malformed configuration.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed to converge or detected a degeneracy.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace combust
