#include "totvar/examples/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "totvar/error.hpp"

namespace totvar::examples {

namespace {

struct FeatureMap {
    Matrix w;  // d x D
    Vector b;  // D

    Matrix operator()(const Matrix& x) const {
        Matrix phi = x * w;
        phi.rowwise() += b.transpose();
        const double amp = std::sqrt(2.0 / static_cast<double>(b.size()));
        return phi.array().cos() * amp;
    }
};

// Unit-lengthscale frequencies; divided by the lengthscale when used.
FeatureMap draw_features(Rng& rng, Index dim, std::size_t count) {
    FeatureMap f;
    f.w.resize(dim, static_cast<Index>(count));
    f.b.resize(static_cast<Index>(count));
    for (Index j = 0; j < f.w.cols(); ++j) {
        for (Index i = 0; i < dim; ++i) f.w(i, j) = standard_normal(rng);
        f.b(j) = 2.0 * std::numbers::pi * uniform01(rng);
    }
    return f;
}

FeatureMap with_lengthscale(const FeatureMap& unit, double ell) {
    return {unit.w / ell, unit.b};
}

Vector ridge_solve(const Matrix& phi, const Vector& y, double penalty) {
    Matrix a = phi.transpose() * phi;
    a.diagonal().array() += penalty;
    return a.ldlt().solve(phi.transpose() * y);
}

double median_pairwise_distance(const Matrix& x) {
    std::vector<double> d;
    const Index n = std::min<Index>(x.rows(), 300);
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < i; ++j) d.push_back((x.row(i) - x.row(j)).norm());
    }
    if (d.empty()) return 1.0;
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid > 0.0 ? *mid : 1.0;
}

Matrix select_rows(const Matrix& x, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
    return out;
}

Vector select_rows(const Vector& z, const std::vector<Index>& rows) {
    Vector out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = z(rows[i]);
    return out;
}

class RidgePredictor : public Predictor {
public:
    RidgePredictor(FeatureMap f, Vector coef, double offset, double residual)
        : features_(std::move(f)), coef_(std::move(coef)), offset_(offset), residual_(residual) {}

    Predictions predict(const Matrix& x) const override {
        Predictions p;
        p.mean = (features_(x) * coef_).array() + offset_;
        p.variance = Vector::Constant(x.rows(), residual_);
        return p;
    }
    double residual_variance() const override { return residual_; }

private:
    FeatureMap features_;
    Vector coef_;
    double offset_;
    double residual_;
};

class ExactGpPredictor : public Predictor {
public:
    ExactGpPredictor(Matrix x, Vector alpha, Matrix chol, GpHyper hyper)
        : x_(std::move(x)), alpha_(std::move(alpha)), chol_(std::move(chol)), hyper_(hyper) {}

    Predictions predict(const Matrix& x) const override {
        Matrix k(x_.rows(), x.rows());
        for (Index j = 0; j < x.rows(); ++j) {
            for (Index i = 0; i < x_.rows(); ++i) {
                k(i, j) = matern15((x_.row(i) - x.row(j)).norm(), hyper_.tau2, hyper_.lambda);
            }
        }
        Predictions p;
        p.mean = k.transpose() * alpha_;
        const Matrix v = chol_.triangularView<Eigen::Lower>().solve(k);
        p.variance = (hyper_.tau2 + hyper_.sigma2 - v.colwise().squaredNorm().array()).transpose();
        p.variance = p.variance.cwiseMax(hyper_.sigma2);
        return p;
    }
    double residual_variance() const override { return hyper_.sigma2; }

private:
    Matrix x_;
    Vector alpha_;
    Matrix chol_;
    GpHyper hyper_;
};

class ScaledPredictor : public Predictor {
public:
    ScaledPredictor(std::unique_ptr<Predictor> inner, double factor)
        : inner_(std::move(inner)), factor_(factor) {}

    Predictions predict(const Matrix& x) const override {
        Predictions p = inner_->predict(x);
        p.variance *= factor_;
        return p;
    }
    double residual_variance() const override { return factor_ * inner_->residual_variance(); }

private:
    std::unique_ptr<Predictor> inner_;
    double factor_;
};

void check_training(const TrainingSet& set) {
    if (set.x.rows() != set.z.size()) throw InvalidInput("surrogate: inputs and responses differ in length");
    if (set.x.rows() < 5) throw InvalidInput("surrogate: need at least 5 training points");
}

} // namespace

std::unique_ptr<Predictor> RandomFeatureRidge::train(const TrainingSet& set, std::uint64_t seed) const {
    check_training(set);
    if (features == 0 || lengthscale_factors.empty() || penalties.empty()) {
        throw InvalidInput("rff surrogate: empty feature set or tuning grid");
    }
    Rng rng = make_rng(seed);
    const FeatureMap unit = draw_features(rng, set.x.cols(), features);

    const Index n = set.x.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = std::max<Index>(1, static_cast<Index>(std::round(validation_fraction * n)));
    const std::vector<Index> val(order.begin(), order.begin() + n_val);
    const std::vector<Index> fit(order.begin() + n_val, order.end());

    const Matrix x_fit = select_rows(set.x, fit);
    const Vector z_fit = select_rows(set.z, fit);
    const Matrix x_val = select_rows(set.x, val);
    const Vector z_val = select_rows(set.z, val);
    const double fit_mean = z_fit.mean();
    const Vector z_fit_c = z_fit.array() - fit_mean;

    const double base = median_pairwise_distance(set.x);
    double best_mse = std::numeric_limits<double>::infinity();
    double best_ell = base;
    double best_pen = penalties.front();
    for (double factor : lengthscale_factors) {
        const FeatureMap f = with_lengthscale(unit, factor * base);
        const Matrix phi_fit = f(x_fit);
        const Matrix phi_val = f(x_val);
        for (double pen : penalties) {
            const Vector coef = ridge_solve(phi_fit, z_fit_c, pen);
            const Vector resid = z_val - ((phi_val * coef).array() + fit_mean).matrix();
            const double mse = resid.squaredNorm() / static_cast<double>(resid.size());
            if (mse < best_mse) {
                best_mse = mse;
                best_ell = factor * base;
                best_pen = pen;
            }
        }
    }
    if (!std::isfinite(best_mse)) throw NumericalError("rff surrogate: validation error not finite");

    FeatureMap chosen = with_lengthscale(unit, best_ell);
    const double mean = set.z.mean();
    const Vector coef = ridge_solve(chosen(set.x), (set.z.array() - mean).matrix(), best_pen);
    return std::make_unique<RidgePredictor>(std::move(chosen), coef, mean, best_mse);
}

std::unique_ptr<Predictor> ExactGpSurrogate::train(const TrainingSet& set, std::uint64_t) const {
    check_training(set);
    if (!set.truth) throw InvalidInput("exact GP surrogate needs the generating hyperparameters");
    const GpHyper h = *set.truth;
    Matrix k = matern_gram(set.x, h.tau2, h.lambda);
    k.diagonal().array() += h.sigma2 + 1e-8 * h.tau2;
    auto chol = lower_cholesky(k);
    if (!chol) throw NumericalError("exact GP surrogate: covariance not positive definite");
    const Vector half = chol->triangularView<Eigen::Lower>().solve(set.z);
    Vector alpha = chol->transpose().triangularView<Eigen::Upper>().solve(half);
    return std::make_unique<ExactGpPredictor>(set.x, std::move(alpha), std::move(*chol), h);
}

VarianceScaledSurrogate::VarianceScaledSurrogate(std::shared_ptr<const Surrogate> inner, double factor)
    : inner_(std::move(inner)), factor_(factor) {
    if (!inner_) throw InvalidInput("variance-scaled surrogate needs an inner surrogate");
    if (!(factor > 0.0)) throw InvalidInput("variance factor must be positive");
}

std::unique_ptr<Predictor> VarianceScaledSurrogate::train(const TrainingSet& set, std::uint64_t seed) const {
    return std::make_unique<ScaledPredictor>(inner_->train(set, seed), factor_);
}

std::string VarianceScaledSurrogate::name() const {
    return inner_->name() + "_x" + std::to_string(factor_);
}

std::shared_ptr<const Surrogate> make_surrogate(const std::string& name) {
    if (name == "rff_ridge" || name == "rff") return std::make_shared<RandomFeatureRidge>();
    if (name == "exact_gp" || name == "exact") return std::make_shared<ExactGpSurrogate>();
    throw InvalidInput("unknown surrogate '" + name + "' (expected rff_ridge or exact_gp)");
}

} // namespace totvar::examples
