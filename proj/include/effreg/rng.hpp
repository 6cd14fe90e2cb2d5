#pragma once

#include <cstdint>

namespace effreg {

// Counter-based splittable generator. Output i of stream s depends only on
// (seed, s, i), so replication streams are independent of execution order
// and of each other. The core transform is the splitmix64 finalizer applied
// to key + counter * golden ratio.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();

    // Uniform on the open interval (0,1).
    double uniform();

    // Standard normal via the Marsaglia polar method (one spare cached).
    double normal();

    // Gamma(shape, scale) via Marsaglia-Tsang squeeze; shape boosting for
    // shape < 1.
    double gamma(double shape, double scale);

    double chi_squared(double nu);

    // Centered minimum extreme value draw: x = lambda*gamma_E + lambda*ln(-ln(1-U)).
    double gumbel_min(double lambda);

    // Skew-t via the skew-normal / chi-squared stochastic representation,
    // then location-scale: xi + omega * Z * sqrt(nu / chi2_nu).
    double skew_t(double xi, double omega, double alpha, double nu);

private:
    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace effreg
