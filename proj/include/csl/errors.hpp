#ifndef CSL_ERRORS_HPP
#define CSL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace csl {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value passed to a library operation violates its precondition.
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

// Problems with a config file or a config-level refusal (e.g. an FPE time
// step that violates the explicit stability bound).
class ConfigError : public Error {
public:
    using Error::Error;
};

// A spatial/phase grid does not cover what an operation needs, or two data
// sets that must share a grid do not.
class DomainError : public Error {
public:
    using Error::Error;
};

// Noise synthesis failed (covariance not positive definite after
// regularization).
class SynthesisError : public Error {
public:
    using Error::Error;
};

// Power-law fitting: non-positive values inside the fit window.
class FitDomainError : public Error {
public:
    using Error::Error;
};

// Power-law fitting: fewer than the minimum number of points in the window.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// A trajectory produced a non-finite state, or too many trajectories did.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// File I/O failure (unwritable path, malformed input file).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace csl

#endif
