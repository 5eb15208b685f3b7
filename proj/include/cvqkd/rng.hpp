#pragma once

// Deterministic random numbers. mt19937_64 is fully specified by the
// standard; the uniform and normal transforms below are spelled out here so
// streams are reproducible across platforms and standard libraries.
// Per-chunk seeds are derived with splitmix64 so parallel generation over
// fixed chunk boundaries is independent of the thread count.

#include <cstdint>
#include <random>

namespace cvqkd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    static Rng for_chunk(std::uint64_t seed, std::uint64_t chunk) {
        return Rng(splitmix64(seed ^ splitmix64(chunk + 1)));
    }

    // uniform in [0,1) with 53 random bits
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller (no cached spare: keeps chunked streams
    // independent of call parity)
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double normal(double mean, double var) {
        return mean + std::sqrt(var) * normal();
    }

    std::uint64_t raw() { return gen_(); }

    // uniform integer in [0, n)
    std::uint64_t index(std::uint64_t n) {
        return gen_() % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace cvqkd
