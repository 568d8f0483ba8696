#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Point sets are stored one point per row.
using PointSet = Eigen::MatrixXd;

/// Raised when input shapes disagree (dimension of points, vector lengths).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization or iterative numerical routine fails.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require_dims(Eigen::Index expected, Eigen::Index actual, const char* what);

}  // namespace gp
