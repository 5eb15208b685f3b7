#pragma once

// Closed-form laws of Alice's Gaussian filter and Bob's notch filter, their
// rejection-sampling (empirical) counterparts, and the PM/EB gain mapping.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "cvqkd/math.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

// P_A = 1 / sqrt(2 g^2 V_mod + 1)
inline double alice_success_prob(double vmod, double g) {
    return 1.0 / std::sqrt(2.0 * g * g * vmod + 1.0);
}

// V_mod~ = V_mod / (2 g^2 V_mod + 1)
inline double alice_effective_vmod(double vmod, double g) {
    return vmod / (2.0 * g * g * vmod + 1.0);
}

// P_B = 1 - erf(c / sqrt(2 V_b)), evaluated as a complementary tail
inline double bob_success_prob_homodyne(double v_b, double c) {
    return gaussian_two_tail(c, v_b);
}

// Bob's renormalized output density: zero inside (-c, c), Gaussian tails
// rescaled by 1/P_B outside.
inline std::function<double(double)> bob_output_pdf_homodyne(double v_b, double c) {
    const double pb = bob_success_prob_homodyne(v_b, c);
    return [v_b, c, pb](double x) {
        if (std::abs(x) < c) return 0.0;
        return gaussian_pdf(x, v_b) / pb;
    };
}

// Heterodyne radial acceptance P(x^2 + p^2 >= c^2) where the measured pair is
// Gaussian with per-axis variances (V_bx+1)/2, (V_bp+1)/2. Symmetric case is
// exp(-c^2/(V_b+1)); the general case reduces to a 1-D Bessel integral.
inline double bob_success_prob_heterodyne(double v_bx, double v_bp, double c) {
    if (c <= 0.0) return 1.0;
    const double va = 0.5 * (v_bx + 1.0), vb = 0.5 * (v_bp + 1.0);
    if (std::abs(va - vb) < 1e-12 * va) return std::exp(-c * c / (v_bx + 1.0));
    const double ia = 0.5 / va, ib = 0.5 / vb;
    const double s = 0.5 * (ia + ib), d = 0.5 * std::abs(ia - ib);
    auto integrand = [&](double r) {
        const double z = d * r * r;
        // scaled Bessel keeps the product finite for large arguments
        const double bess = z < 500.0 ? std::cyl_bessel_i(0.0, z) * std::exp(-z)
                                      : 1.0 / std::sqrt(2.0 * kPi * z);
        return r * std::exp(-(s - d) * r * r) * bess / std::sqrt(va * vb);
    };
    const double inside = integrate(integrand, 0.0, c, 1e-13);
    return std::min(1.0, std::max(0.0, 1.0 - inside));
}

// g' = g sqrt(2(V-1)/(V+1)): the gain Alice uses on her heterodyne outcomes
// in the entanglement-based picture to reproduce the prepare-and-measure
// filter statistics.
inline double eb_equivalent_gain(double g, double v) {
    if (v < 1.0) throw InvalidParams("V must be >= 1");
    return g * std::sqrt(2.0 * (v - 1.0) / (v + 1.0));
}

// EB-side closed forms (used by the equivalence tests): success probability
// and effective modulation variance after filtering mode A1 with gain g'.
inline double eb_success_prob(double v, double gp) {
    return 1.0 / (gp * gp * (v + 1.0) + 1.0);
}
inline double eb_effective_vmod(double v, double gp) {
    return (v - 1.0) / (gp * gp * (v + 1.0) + 1.0);
}
inline double eb_success_prob_asymmetric(double vx, double vp, double gpx, double gpp) {
    return 1.0 / std::sqrt((gpx * gpx * (vx + 1.0) + 1.0) * (gpp * gpp * (vp + 1.0) + 1.0));
}

// ---- rejection sampling ----------------------------------------------------------

struct RejectionResult {
    std::vector<std::uint32_t> kept;  // indices into the input sequence
    std::size_t accepted_x = 0;       // per-quadrature accept counts
    std::size_t accepted_p = 0;
    std::size_t total = 0;

    double rate_x() const { return total ? static_cast<double>(accepted_x) / total : 1.0; }
    double rate_p() const { return total ? static_cast<double>(accepted_p) / total : 1.0; }
    double rate_joint() const { return total ? static_cast<double>(kept.size()) / total : 1.0; }
};

// One uniform draw per symbol per quadrature; a symbol survives only if both
// draws accept, so the joint keep rate estimates P_Ax * P_Ap. An optional
// acceptance hook replaces exp(-g^2 v^2) for non-Gaussian filter shapes.
inline RejectionResult alice_rejection_filter(
    const std::vector<std::pair<double, double>>& symbols, double g_x, double g_p,
    std::uint64_t seed,
    const std::function<double(double, double)>& acceptance = {}) {
    RejectionResult res;
    res.total = symbols.size();
    Rng rng = Rng::for_chunk(seed, 0);
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const auto [xa, pa] = symbols[i];
        const double fx = acceptance ? acceptance(xa, g_x) : std::exp(-g_x * g_x * xa * xa);
        const double fp = acceptance ? acceptance(pa, g_p) : std::exp(-g_p * g_p * pa * pa);
        const bool ax = rng.uniform() <= fx;
        const bool ap = rng.uniform() <= fp;
        res.accepted_x += ax;
        res.accepted_p += ap;
        if (ax && ap) res.kept.push_back(static_cast<std::uint32_t>(i));
    }
    return res;
}

}  // namespace cvqkd
