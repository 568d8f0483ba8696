#pragma once

#include "gp_pathwise/types.hpp"

#include <functional>

namespace gp {

/// Objective returning f(x) and writing its gradient into `grad`.
using ValueAndGradient = std::function<double(const Vector& x, Vector& grad)>;

struct BoxOptions {
    double lower = 0.0;
    double upper = 1.0;
    int max_iters = 50;
    double grad_tol = 1e-6;  // on the infinity norm of the projected gradient
    int memory = 10;
};

struct BoxResult {
    Vector x;
    double value = 0.0;
    Vector gradient;
    int iterations = 0;
    bool converged = false;
    bool line_search_failed = false;
};

/// Projected limited-memory quasi-Newton minimization over a box. A failed
/// line search stops the run at the last accepted iterate, which is the
/// start itself when no step was accepted.
BoxResult minimize_box(const ValueAndGradient& fg, const Vector& x0, const BoxOptions& options = {});

/// Infinity norm of P(x - g) - x, the first-order optimality measure on a box.
double projected_gradient_norm(const Vector& x, const Vector& g, double lower, double upper);

}  // namespace gp
