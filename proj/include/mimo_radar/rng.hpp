#ifndef MIMO_RADAR_RNG_HPP
#define MIMO_RADAR_RNG_HPP

#include <cstdint>
#include <random>

#include "mimo_radar/core.hpp"

namespace mimo_radar {

enum class StreamRole : std::uint64_t { Noise = 1, Channel = 2, NullNoise = 3, Auxiliary = 4 };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for one (seed, trial, role) triple; trials can be replayed in any order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t trial, StreamRole role) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ trial);
    key = splitmix64(key ^ static_cast<std::uint64_t>(role));
    return std::mt19937_64(key);
}

/// Circularly symmetric complex Gaussian with E|z|^2 = variance.
class ComplexNormal {
public:
    explicit ComplexNormal(double variance = 1.0) : dist_(0.0, std::sqrt(variance / 2.0)) {}

    template <class Engine>
    Complex operator()(Engine& eng) {
        const double re = dist_(eng);
        const double im = dist_(eng);
        return {re, im};
    }

private:
    std::normal_distribution<double> dist_;
};

}  // namespace mimo_radar

#endif
