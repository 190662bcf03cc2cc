#include "totvar/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace totvar {

Matrix symmetrized(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

double min_eigenvalue(const Matrix& symmetric) {
    if (symmetric.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

bool is_symmetric(const Matrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

double relative_difference(const Matrix& a, const Matrix& b, double floor) {
    const double denom = std::max(b.norm(), floor);
    return (a - b).norm() / denom;
}

std::optional<Matrix> lower_cholesky(const Matrix& spd) {
    Eigen::LLT<Matrix> llt(spd);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Matrix lower = llt.matrixL();
    for (Index i = 0; i < lower.rows(); ++i) {
        if (!(lower(i, i) > 0.0) || !std::isfinite(lower(i, i))) return std::nullopt;
    }
    return lower;
}

CompensatedSum::CompensatedSum(Index rows, Index cols)
    : sum_(Matrix::Zero(rows, cols)), comp_(Matrix::Zero(rows, cols)) {}

void CompensatedSum::add(const Matrix& term) {
    for (Index j = 0; j < sum_.cols(); ++j) {
        for (Index i = 0; i < sum_.rows(); ++i) {
            const double s = sum_(i, j);
            const double x = term(i, j);
            const double t = s + x;
            if (std::abs(s) >= std::abs(x)) {
                comp_(i, j) += (s - t) + x;
            } else {
                comp_(i, j) += (x - t) + s;
            }
            sum_(i, j) = t;
        }
    }
}

} // namespace totvar
