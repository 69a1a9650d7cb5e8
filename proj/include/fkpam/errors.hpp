#pragma once

#include <stdexcept>
#include <string>

namespace fkpam {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid parameters at construction or call time.
struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(what) {}
};

/// Evaluation requested exactly at a non-removable singularity.
struct SingularEvaluation : Error {
    explicit SingularEvaluation(const std::string& what) : Error(what) {}
};

/// Two objects built on incompatible grids were combined.
struct GridMismatch : Error {
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

/// Query outside a table range or a field box; extrapolation is refused.
struct OutOfRange : Error {
    explicit OutOfRange(const std::string& what) : Error(what) {}
};

/// An adaptive quadrature failed to reach its tolerance.
struct QuadratureError : Error {
    explicit QuadratureError(const std::string& what) : Error(what) {}
};

/// A configuration file failed validation.
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace fkpam
