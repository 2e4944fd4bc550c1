#pragma once

#include <stdexcept>
#include <string>

namespace degschro {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible range. `parameter()` names it.
class DomainError : public Error {
public:
    DomainError(std::string parameter, const std::string& what)
        : Error(parameter + ": " + what), parameter_(std::move(parameter)) {}
    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

class RangeError : public DomainError {
public:
    using DomainError::DomainError;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Inconsistent combination of otherwise valid inputs (e.g. variant P with m_kappa >= 1).
class ConfigurationError : public Error {
public:
    using Error::Error;
};

class InvalidCoefficientError : public Error {
public:
    using Error::Error;
};

class HypothesisViolationError : public Error {
public:
    using Error::Error;
};

class UnsupportedGridError : public Error {
public:
    using Error::Error;
};

class DegenerateDataError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Solver-level failure. Mapped to exit code 3 by the CLI.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// The shift hit the discrete spectrum; carries the nearest eigenvalue estimate.
class SpectralCollisionError : public NumericalError {
public:
    SpectralCollisionError(const std::string& what, double nearest_re, double nearest_im)
        : NumericalError(what), re_(nearest_re), im_(nearest_im) {}
    double nearest_real() const noexcept { return re_; }
    double nearest_imag() const noexcept { return im_; }

private:
    double re_;
    double im_;
};

class NearSingularResolventError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

} // namespace degschro
