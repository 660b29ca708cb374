#pragma once

#include <stdexcept>
#include <string>

namespace lftid {

// Base of every error raised by the library. Each subclass corresponds to one
// violated precondition so callers (the CLI in particular) can map them onto
// stable exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// I - P(theta) D_zv is numerically singular.
class WellPosednessViolated : public Error {
public:
    using Error::Error;
};

// s E - A is singular at the requested point.
class SingularPencil : public Error {
public:
    using Error::Error;
};

// A generator eigenvalue is a generalized eigenvalue of (E, A_xx).
class NominalPoleCollision : public SingularPencil {
public:
    using SingularPencil::SingularPencil;
};

class DefectiveGenerator : public Error {
public:
    using Error::Error;
};

class SingularT : public Error {
public:
    using Error::Error;
};

class ComponentNotReal : public Error {
public:
    using Error::Error;
};

// Generator and plant spectra (nearly) intersect; the steady-state maps do not exist.
class SharedEigenvalue : public Error {
public:
    using Error::Error;
};

// Pencil index >= 2: impulsive modes are not simulated.
class UnsupportedIndex : public Error {
public:
    using Error::Error;
};

class NotPersistentlyExciting : public Error {
public:
    NotPersistentlyExciting(const std::string& what, double sigma_min)
        : Error(what), sigma_min_(sigma_min) {}
    double sigma_min() const noexcept { return sigma_min_; }

private:
    double sigma_min_;
};

class NotIdentifiableFromData : public Error {
public:
    NotIdentifiableFromData(const std::string& what, double sigma_min)
        : Error(what), sigma_min_(sigma_min) {}
    double sigma_min() const noexcept { return sigma_min_; }

private:
    double sigma_min_;
};

class ZeroTrueParameter : public Error {
public:
    using Error::Error;
};

class Unstable : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace lftid
