#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace perron {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for replica r of start type i under a master seed.  Purely a
// function of its arguments, so the replica schedule (thread count,
// completion order) cannot change any stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t type_index,
                                 std::uint64_t replica) {
    std::uint64_t z = mix64(master + 0x9e3779b97f4a7c15ULL);
    z = mix64(z ^ (type_index + 0x9e3779b97f4a7c15ULL));
    z = mix64(z ^ (replica + 0x9e3779b97f4a7c15ULL));
    return z;
}

inline std::mt19937_64 replica_stream(std::uint64_t master,
                                      std::uint64_t type_index,
                                      std::uint64_t replica) {
    return std::mt19937_64(derive_seed(master, type_index, replica));
}

// Uniform on [0, 1 - 2^-53]: 53 mantissa bits of one engine draw.  Never
// returns 1, so inverse transforms below stay finite.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Exponential with the given rate, via inverse transform.
inline double exp_draw(std::mt19937_64& rng, double rate) {
    return -std::log1p(-uniform01(rng)) / rate;
}

// Killing clock: P(tau >= n) = (1/lambda)^{n-1} for n >= 1, sampled up
// front from a single uniform.  Requires lambda > 1.
inline std::uint64_t sample_clock_tau(double lambda, std::mt19937_64& rng) {
    double q = 1.0 / lambda;                // survival probability per step
    double u = 1.0 - uniform01(rng);        // uniform on (0, 1]
    double t = std::floor(std::log(u) / std::log(q));
    if (t < 0.0) t = 0.0;                   // guard against rounding
    if (t > 9.0e18) t = 9.0e18;
    return 1 + static_cast<std::uint64_t>(t);
}

}  // namespace perron
