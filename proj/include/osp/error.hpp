#pragma once

#include <stdexcept>
#include <string>

namespace osp {

/// Bad input: violated preconditions, malformed files, inconsistent shapes.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that could not be completed to the requested accuracy
/// (quadrature non-convergence, failed factorization, ...).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace osp
