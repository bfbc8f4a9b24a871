#pragma once

#include <stdexcept>
#include <string>

namespace effrank {

// Shared error taxonomy. The CLI maps ConfigError (and malformed input in
// general) to exit code 3; assertion-mode breaches use exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidMatrix : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct DegenerateMatrix : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NotAbsolutelyContinuous : Error { using Error::Error; };
struct NotSubGaussian : Error { using Error::Error; };
struct NotSubExponential : Error { using Error::Error; };
struct MomentDoesNotExist : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

} // namespace effrank
