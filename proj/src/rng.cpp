#include "effreg/rng.hpp"
#include "effreg/error.hpp"

#include <cmath>

namespace effreg {

namespace {

constexpr std::uint64_t GOLDEN = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr double EULER_GAMMA = 0.57721566490153286061;

} // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) {
    key_ = mix64(mix64(seed + GOLDEN) ^
                 (stream * 0xD2B74407B1CE6E93ull + 0x8BB84B93962EACC9ull));
}

std::uint64_t CounterRng::next_u64() {
    ++ctr_;
    return mix64(key_ + ctr_ * GOLDEN);
}

double CounterRng::uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

double CounterRng::gamma(double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw DomainError("gamma: shape and scale must be positive");
    if (shape < 1.0) {
        const double boost = std::pow(uniform(), 1.0 / shape);
        return gamma(shape + 1.0, scale) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v * scale;
    }
}

double CounterRng::chi_squared(double nu) {
    return gamma(0.5 * nu, 2.0);
}

double CounterRng::gumbel_min(double lambda) {
    if (!(lambda > 0.0)) throw DomainError("gumbel_min: lambda must be positive");
    const double u = uniform();
    return lambda * EULER_GAMMA + lambda * std::log(-std::log1p(-u));
}

double CounterRng::skew_t(double xi, double omega, double alpha, double nu) {
    if (!(omega > 0.0) || !(nu > 0.0))
        throw DomainError("skew_t: omega and nu must be positive");
    const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
    const double u0 = normal();
    const double u1 = normal();
    const double z = delta * std::abs(u0) +
                     std::sqrt(1.0 - delta * delta) * u1;
    const double w = chi_squared(nu);
    return xi + omega * z * std::sqrt(nu / w);
}

} // namespace effreg
