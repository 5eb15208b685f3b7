#pragma once

// Shared test fixtures: the experimental regimes used as regression anchors,
// random covariance-matrix generators, and small numeric utilities.

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/symplectic.hpp"
#include "cvqkd/types.hpp"

namespace testers {

using namespace cvqkd;

// Table of terrestrial homodyne regimes (distance tag, T, vmod_x, vmod_p,
// W_x, W_p, raw key rate) with trusted noise (0.28, 0.40) and beta = 0.92.
struct Regime {
    const char* name;
    double t, vmod_x, vmod_p, w_x, w_p;
    double key_raw;
};

inline const Regime kRegimes[4] = {
    {"6km", 0.757, 12.62, 13.52, 1.02, 1.04, 0.4839},
    {"15.1km", 0.499, 12.65, 13.63, 1.02, 1.03, 0.1433},
    {"29.1km", 0.261, 12.74, 13.52, 1.02, 1.01, -0.0093},
    {"39.1km", 0.166, 12.58, 13.40, 1.00, 1.00, 0.0099},
};

inline ChannelParams regime_channel(const Regime& r) {
    ChannelParams ch;
    ch.t = r.t;
    ch.w_x = r.w_x;
    ch.w_p = r.w_p;
    ch.xi_x = 0.28;
    ch.xi_p = 0.40;
    return ch;
}

inline ModulationParams regime_modulation(const Regime& r) {
    return ModulationParams{r.vmod_x, r.vmod_p, 0.92};
}

// Data61 heterodyne scenario (x/p rows of the qOptica run).
inline ChannelParams data61_channel() {
    ChannelParams ch;
    ch.t = std::pow(10.0, -7.92 / 10.0);
    ch.w_x = 1.0437;
    ch.w_p = 1.0654;
    ch.xi_x = 0.0867;
    ch.xi_p = 0.0933;
    ch.eta = 0.206;
    ch.xi_d_x = 0.4401;
    ch.xi_d_p = 0.4459;
    return ch;
}

inline ModulationParams data61_modulation() { return ModulationParams{4.06, 4.21, 0.925}; }

inline std::mt19937_64& test_rng() {
    static std::mt19937_64 rng(20240817ULL);
    return rng;
}

inline double uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(test_rng());
}

inline Mat4 random_symplectic(double max_squeeze = 1.2) {
    Mat4 s = rotation_pair(uniform(-kPi, kPi), uniform(-kPi, kPi));
    s = s * beamsplitter(uniform(0.0, 1.0));
    s = s * squeeze_pair(uniform(-max_squeeze, max_squeeze), uniform(-max_squeeze, max_squeeze));
    s = s * rotation_pair(uniform(-kPi, kPi), uniform(-kPi, kPi));
    s = s * beamsplitter(uniform(0.0, 1.0));
    s = s * rotation_pair(uniform(-kPi, kPi), uniform(-kPi, kPi));
    return s;
}

// bona fide CM with symplectic eigenvalues in [1, lam_max]
inline Mat4 random_covariance(double lam_max = 3.0, double max_squeeze = 1.2) {
    const Mat4 s = random_symplectic(max_squeeze);
    Mat4 d = Mat4::Zero();
    const double l1 = uniform(1.0, lam_max), l2 = uniform(1.0, lam_max);
    d(0, 0) = d(1, 1) = std::max(l1, l2);
    d(2, 2) = d(3, 3) = std::min(l1, l2);
    return s * d * s.transpose();
}

inline ChannelParams random_channel() {
    ChannelParams ch;
    ch.t = uniform(0.1, 0.95);
    ch.w_x = uniform(1.0, 1.3);
    ch.w_p = uniform(1.0, 1.3);
    ch.xi_x = uniform(0.0, 0.4);
    ch.xi_p = uniform(0.0, 0.4);
    return ch;
}

}  // namespace testers
