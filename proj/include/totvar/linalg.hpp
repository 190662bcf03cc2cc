#pragma once

#include <optional>

#include <Eigen/Dense>

namespace totvar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// (A + A^T) / 2
Matrix symmetrized(const Matrix& a);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& symmetric);

/// True when `a` is symmetric within `rel_tol` relative to its largest entry.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-12);

/// ||a - b||_F / max(||b||_F, floor). The floor keeps the ratio finite for
/// near-zero references; pass a problem scale when `b` may vanish.
double relative_difference(const Matrix& a, const Matrix& b, double floor = 1e-300);

/// Lower Cholesky factor with strictly positive diagonal, or nullopt when the
/// matrix is not numerically positive definite.
std::optional<Matrix> lower_cholesky(const Matrix& spd);

/// Neumaier-compensated accumulator for dense matrices (and vectors).
class CompensatedSum {
public:
    CompensatedSum(Index rows, Index cols);

    void add(const Matrix& term);
    Matrix value() const { return sum_ + comp_; }

private:
    Matrix sum_;
    Matrix comp_;
};

} // namespace totvar
