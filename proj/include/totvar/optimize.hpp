#pragma once

#include <functional>

#include "totvar/linalg.hpp"

namespace totvar {

/// Objective returning f(x) and writing the gradient into `grad`.
using SmoothObjective = std::function<double(const Vector& x, Vector& grad)>;

struct MinimizeOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-9;  ///< on ||grad|| / (1 + ||x||)
    double step_tolerance = 1e-14;
};

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// BFGS with a backtracking Armijo line search. Non-finite trial values are
/// treated as infeasible and shrink the step.
MinimizeResult minimize_bfgs(const SmoothObjective& objective, const Vector& start,
                             const MinimizeOptions& options = {});

/// Central-difference gradient with per-coordinate step rel_step (1 + |x_i|).
Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        double rel_step = 1e-6);

/// Central-difference Hessian with per-coordinate step rel_step (1 + |x_i|).
Matrix central_hessian(const std::function<double(const Vector&)>& f, const Vector& x,
                       double rel_step = 1e-4);

} // namespace totvar
