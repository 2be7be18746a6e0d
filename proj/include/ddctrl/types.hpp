#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ddctrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
    horizon_exceeds_data,
    dimension_mismatch,
    invalid_argument,
    infeasible,
    unbounded,
    unobservable,
    identifiability,
    config,
    io,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; `kind()` distinguishes the failure.
// `residual()` carries a certificate where one exists (e.g. the least-squares
// residual of an inconsistent constraint system).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, double residual = 0.0)
        : std::runtime_error(what), kind_(kind), residual_(residual) {}

    ErrorKind kind() const noexcept { return kind_; }
    double residual() const noexcept { return residual_; }

private:
    ErrorKind kind_;
    double residual_;
};

}  // namespace ddctrl
