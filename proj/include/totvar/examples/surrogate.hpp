#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "totvar/examples/gp.hpp"

namespace totvar::examples {

/// Gaussian plug-in predictions at a set of inputs.
struct Predictions {
    Vector mean;
    Vector variance;
};

class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Predictions predict(const Matrix& x) const = 0;
    /// Residual variance of the fit; its square root enters the conditioning distance.
    virtual double residual_variance() const = 0;
};

struct TrainingSet {
    Matrix x;
    Vector z;
    std::optional<GpHyper> truth;  ///< only the exact-GP surrogate reads this
};

/// A training procedure. Must be deterministic given (set, seed) and safe to
/// call from several threads at once.
class Surrogate {
public:
    virtual ~Surrogate() = default;
    virtual std::unique_ptr<Predictor> train(const TrainingSet& set, std::uint64_t seed) const = 0;
    virtual std::string name() const = 0;
};

/// Ridge regression on random Fourier features of a Gaussian kernel. The
/// lengthscale (multiples of the median pairwise distance) and the penalty
/// are picked on a held-out 20% split, whose mean squared error becomes the
/// residual variance; the chosen model is then refit on all data.
class RandomFeatureRidge : public Surrogate {
public:
    std::size_t features = 256;
    double validation_fraction = 0.2;
    std::vector<double> lengthscale_factors{0.25, 0.5, 1.0};
    std::vector<double> penalties{1e-3, 1e-2, 1e-1, 1.0};

    std::unique_ptr<Predictor> train(const TrainingSet& set, std::uint64_t seed) const override;
    std::string name() const override { return "rff_ridge"; }
};

/// GP predictive at the generating hyperparameters; pointwise variance
/// tau2 - k^T (K + sigma2 I)^{-1} k + sigma2.
class ExactGpSurrogate : public Surrogate {
public:
    std::unique_ptr<Predictor> train(const TrainingSet& set, std::uint64_t seed) const override;
    std::string name() const override { return "exact_gp"; }
};

/// Multiplies predictive and residual variances of another surrogate.
class VarianceScaledSurrogate : public Surrogate {
public:
    VarianceScaledSurrogate(std::shared_ptr<const Surrogate> inner, double factor);
    std::unique_ptr<Predictor> train(const TrainingSet& set, std::uint64_t seed) const override;
    std::string name() const override;

private:
    std::shared_ptr<const Surrogate> inner_;
    double factor_;
};

std::shared_ptr<const Surrogate> make_surrogate(const std::string& name);

} // namespace totvar::examples
