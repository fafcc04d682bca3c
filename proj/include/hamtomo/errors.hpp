// errors.hpp — Exception types shared across the toolkit.
#pragma once

#include <stdexcept>
#include <string>

namespace hamtomo {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A matrix failed a structural predicate (hermitean, unitary, ...).
struct StructureError : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// dexp at the given base point is not invertible: an eigenvalue gap g of the
// generator has |phi(ig)| below tolerance (gap in 2*pi*Z).
struct SingularDerivative : Error {
    SingularDerivative(const std::string& msg, double gap_) : Error(msg), gap(gap_) {}
    double gap;
};

// Two mod-2pi eigenvalue clusters are too close to separate but too far to merge.
struct AmbiguousClustering : Error {
    using Error::Error;
};

struct OutOfDomain : Error {
    using Error::Error;
};

struct UnknownPhantom : Error {
    using Error::Error;
};

struct InvalidInterval : Error {
    using Error::Error;
};

// Unitary recovery could not anchor a row/column phase against any probe.
struct DegenerateColumn : Error {
    using Error::Error;
};

// The amplitude oracle's answers are not consistent with any unitary matrix.
struct InconsistentOracle : Error {
    using Error::Error;
};

// Phase-calibration continuation: consecutive family members too far apart.
struct BranchJump : Error {
    using Error::Error;
};

// A matrix entry required to be nonzero (generic) is numerically zero.
struct NonGenericMatrix : Error {
    using Error::Error;
};

struct InsufficientAngles : Error {
    using Error::Error;
};

// A weight matrix fell below the declared invertibility tolerance.
struct NonInvertibleWeight : Error {
    using Error::Error;
};

struct TooManySkipped : Error {
    using Error::Error;
};

struct Diverged : Error {
    using Error::Error;
};

struct WeightDegenerate : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace hamtomo
