#include "totvar/optimize.hpp"

#include <cmath>
#include <limits>

namespace totvar {

MinimizeResult minimize_bfgs(const SmoothObjective& objective, const Vector& start,
                             const MinimizeOptions& options) {
    const Index n = start.size();
    MinimizeResult res;
    res.x = start;
    Vector grad(n);
    res.value = objective(res.x, grad);
    if (!std::isfinite(res.value) || !grad.allFinite()) {
        res.gradient_norm = std::numeric_limits<double>::infinity();
        return res;
    }
    Matrix inv_hessian = Matrix::Identity(n, n);
    Vector trial(n), trial_grad(n);

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        res.gradient_norm = grad.norm();
        if (res.gradient_norm <= options.gradient_tolerance * (1.0 + res.x.norm())) {
            res.converged = true;
            return res;
        }
        Vector direction = -inv_hessian * grad;
        double slope = grad.dot(direction);
        if (!(slope < 0.0)) {
            inv_hessian.setIdentity();
            direction = -grad;
            slope = -grad.squaredNorm();
        }
        // Keep the first step bounded when the curvature estimate is poor.
        double step = 1.0;
        const double dir_norm = direction.norm();
        if (dir_norm > 10.0 * (1.0 + res.x.norm())) step = 10.0 * (1.0 + res.x.norm()) / dir_norm;

        double trial_value = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial = res.x + step * direction;
            trial_value = objective(trial, trial_grad);
            if (std::isfinite(trial_value) && trial_grad.allFinite() &&
                trial_value <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No decrease is representable any more. That is convergence when
            // the quasi-Newton step is already below the step tolerance scale,
            // as happens for very sharply curved objectives.
            const double newton = (inv_hessian * grad).norm();
            if (newton <= 1e-8 * (1.0 + res.x.norm())) {
                res.converged = true;
                return res;
            }
            if (inv_hessian.isIdentity()) return res;
            inv_hessian.setIdentity();
            continue;
        }
        const Vector s = trial - res.x;
        const Vector y = trial_grad - grad;
        const double sy = s.dot(y);
        const double change = s.norm();
        res.x = trial;
        res.value = trial_value;
        grad = trial_grad;
        if (change <= options.step_tolerance * (1.0 + res.x.norm())) {
            res.gradient_norm = grad.norm();
            res.converged = res.gradient_norm <= 1e3 * options.gradient_tolerance * (1.0 + res.x.norm()) ||
                            (inv_hessian * grad).norm() <= 1e-8 * (1.0 + res.x.norm());
            return res;
        }
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix ident = Matrix::Identity(n, n);
            inv_hessian = (ident - rho * s * y.transpose()) * inv_hessian *
                              (ident - rho * y * s.transpose()) +
                          rho * s * s.transpose();
        }
    }
    res.gradient_norm = grad.norm();
    res.converged = res.gradient_norm <= options.gradient_tolerance * (1.0 + res.x.norm());
    return res;
}

Vector central_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                        double rel_step) {
    Vector g(x.size());
    Vector xp = x, xm = x;
    for (Index i = 0; i < x.size(); ++i) {
        const double h = rel_step * (1.0 + std::abs(x(i)));
        xp(i) = x(i) + h;
        xm(i) = x(i) - h;
        g(i) = (f(xp) - f(xm)) / (2.0 * h);
        xp(i) = x(i);
        xm(i) = x(i);
    }
    return g;
}

Matrix central_hessian(const std::function<double(const Vector&)>& f, const Vector& x,
                       double rel_step) {
    const Index n = x.size();
    Vector h(n);
    for (Index i = 0; i < n; ++i) h(i) = rel_step * (1.0 + std::abs(x(i)));
    const double f0 = f(x);
    Matrix hess(n, n);
    Vector p = x;
    for (Index i = 0; i < n; ++i) {
        p(i) = x(i) + h(i);
        const double fp = f(p);
        p(i) = x(i) - h(i);
        const double fm = f(p);
        p(i) = x(i);
        hess(i, i) = (fp - 2.0 * f0 + fm) / (h(i) * h(i));
        for (Index j = 0; j < i; ++j) {
            p(i) = x(i) + h(i); p(j) = x(j) + h(j);
            const double fpp = f(p);
            p(j) = x(j) - h(j);
            const double fpm = f(p);
            p(i) = x(i) - h(i);
            const double fmm = f(p);
            p(j) = x(j) + h(j);
            const double fmp = f(p);
            p(i) = x(i); p(j) = x(j);
            hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h(i) * h(j));
        }
    }
    return hess;
}

} // namespace totvar
