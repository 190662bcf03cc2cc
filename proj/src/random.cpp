#include "totvar/random.hpp"

namespace totvar {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

Rng make_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    return Rng(seq);
}

double standard_normal(Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

Vector standard_normal(Rng& rng, Index n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vector out(n);
    for (Index i = 0; i < n; ++i) out(i) = dist(rng);
    return out;
}

Vector multivariate_normal(Rng& rng, const Vector& mean, const Matrix& lower) {
    return mean + lower * standard_normal(rng, mean.size());
}

double gamma_rate(Rng& rng, double shape, double rate) {
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(rng);
}

double inverse_gamma(Rng& rng, double shape, double scale) {
    return 1.0 / gamma_rate(rng, shape, scale);
}

double uniform01(Rng& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(rng);
}

} // namespace totvar
