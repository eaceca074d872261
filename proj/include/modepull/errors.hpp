#pragma once

#include <stdexcept>
#include <string>

namespace modepull {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

/// The group index magnitude fell below the configured floor: the
/// evaluation point sits numerically on a bifurcation pole where the
/// pulling factor diverges.
class PoleError : public Error {
public:
    PoleError(const std::string& what, double detuning_hz, double n_g)
        : Error(what), detuning_hz(detuning_hz), n_g(n_g) {}
    double detuning_hz;
    double n_g;
};

/// Resonance strength sits exactly at the bifurcation threshold, where
/// the maximum pulling factor diverges.
class ThresholdError : public Error {
public:
    using Error::Error;
};

/// No lasing solution inside the search window.
class NoSolutionError : public Error {
public:
    using Error::Error;
};

/// All ordinates equal: the data carry no shape information to fit.
class FlatDataError : public Error {
public:
    using Error::Error;
};

/// Rank-deficient least-squares system (e.g. duplicated abscissae).
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// Local response slope requested at a branch jump, where it is undefined.
class DerivativeUndefinedError : public Error {
public:
    using Error::Error;
};

class CsvError : public Error {
public:
    using Error::Error;
};

}  // namespace modepull
