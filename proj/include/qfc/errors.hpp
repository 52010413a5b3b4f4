#pragma once

#include <stdexcept>
#include <string>

namespace qfc {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input outside a documented validity window (e.g. Sellmeier wavelength range).
class RangeError : public Error {
public:
    using Error::Error;
};

// Mathematically impossible input (degenerate wavelengths, g2 >= 1, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Root finder could not bracket or refine a solution.
class SolverError : public Error {
public:
    using Error::Error;
};

// Photon-number distribution cannot reach the requested (brightness, g2) pair.
class CalibrationError : public Error {
public:
    using Error::Error;
};

// Malformed or unsorted input data.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Binary/tag-file format violations.
class FormatError : public Error {
public:
    using Error::Error;
};

// Configuration file problems (missing file, unknown key, bad unit).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace qfc
