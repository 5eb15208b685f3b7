#pragma once

// Key-rate pipeline: GG02 baseline, Alice's Gaussian post-selection, Bob's
// notch filter with the Fock-space bound on Eve, and the quadrature/success
// probability averaging that combines them.
//
// Averaging rules (homodyne): I = 0.5 P_Bx P_Ax I_x + 0.5 P_Bp P_Ap I_p for
// both the mutual information and Eve's information, K = beta I_AB - I_E.
// Heterodyne: I_AB = (I_x + I_p)/2, Eve conditions on the outcome pair, and
// K = P_B P_Ax P_Ap (beta I_AB - I_E).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/filters.hpp"
#include "cvqkd/fock.hpp"
#include "cvqkd/gaussian.hpp"
#include "cvqkd/mutual_info.hpp"
#include "cvqkd/symplectic.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

struct FockOptions {
    int truncation = 0;          // 0 = choose automatically
    double tail_tol = 1e-4;
    int guard = 8;
    int cap = 160;
    int threads = 1;
    double convergence_tol = 1e-3;   // |dS| between N and N+10, bits
    double oracle_tol = 0.01;        // c = 0 agreement with the Gaussian bound
};

struct FockDiagnostics {
    int n = 0;                 // truncation of the reported value
    double delta_s = 0.0;      // |I_E(N+10) - I_E(N)|
    double weight_deficit = 0.0;
    double s_avg = 0.0;
    double s_cond = 0.0;
    bool converged = false;
};

struct FockEveResult {
    double i_e = 0.0;
    double i_e_extremality = 0.0;  // Gaussian bound on the filtered ensemble
    FockDiagnostics diag;
};

struct KeyRateReport {
    Detection detection = Detection::homodyne;
    std::string method = "gaussian";
    double beta = 0.92;
    double key_rate = 0.0;
    double i_ab = 0.0;  // averaged mutual information entering K
    double i_e = 0.0;   // averaged Eve information entering K
    double i_ab_x = 0.0, i_ab_p = 0.0;
    double i_e_x = 0.0, i_e_p = 0.0;  // heterodyne: joint value in both slots
    double p_alice_x = 1.0, p_alice_p = 1.0;
    double p_bob_x = 1.0, p_bob_p = 1.0;
    double p_bob_rad = 1.0;
    double vmod_eff_x = 0.0, vmod_eff_p = 0.0;
    double v_b_x = 0.0, v_b_p = 0.0;
    std::optional<FockDiagnostics> fock_x;
    std::optional<FockDiagnostics> fock_p;

    bool secure() const { return key_rate > 0.0; }
};

inline ModulationParams effective_modulation(const ModulationParams& mod, double g_x, double g_p) {
    ModulationParams eff = mod;
    eff.vmod_x = alice_effective_vmod(mod.vmod_x, g_x);
    eff.vmod_p = alice_effective_vmod(mod.vmod_p, g_p);
    return eff;
}

// Untrusted-detector reduction for homodyne scenarios specified with a
// detector: fold (eta, xi_d) into an equivalent channel, T -> eta T.
inline ChannelParams absorb_detector(const ChannelParams& ch) {
    ChannelParams out = ch;
    if (ch.eta >= 1.0 && ch.xi_d_x == 0.0 && ch.xi_d_p == 0.0) return out;
    const double tp = ch.eta * ch.t;
    auto weff = [&](double w, double xid) {
        if (tp >= 1.0) return std::max(1.0, w);
        return std::max(1.0, (ch.eta * (1.0 - ch.t) * w + (1.0 - ch.eta) + xid) / (1.0 - tp));
    };
    out.w_x = weff(ch.w_x, ch.xi_d_x);
    out.w_p = weff(ch.w_p, ch.xi_d_p);
    out.t = tp;
    out.eta = 1.0;
    out.xi_d_x = out.xi_d_p = 0.0;
    return out;
}

// ---- Gaussian stages ---------------------------------------------------------------

// Key rate after Alice's filter with gains (g_x, g_p); g = 0 is the GG02
// baseline (identical code path).
inline KeyRateReport keyrate_after_alice(const ModulationParams& mod, const ChannelParams& ch,
                                         Detection det, double g_x, double g_p) {
    mod.validate();
    ch.validate();
    if (g_x < 0.0 || g_p < 0.0) throw InvalidParams("gains must be >= 0");

    KeyRateReport r;
    r.detection = det;
    r.beta = mod.beta;
    r.p_alice_x = alice_success_prob(mod.vmod_x, g_x);
    r.p_alice_p = alice_success_prob(mod.vmod_p, g_p);
    const ModulationParams eff = effective_modulation(mod, g_x, g_p);
    r.vmod_eff_x = eff.vmod_x;
    r.vmod_eff_p = eff.vmod_p;
    r.v_b_x = bob_variance(eff, ch, det, Quadrature::x);
    r.v_b_p = bob_variance(eff, ch, det, Quadrature::p);
    r.i_ab_x = gaussian_mutual_info_quad(eff, ch, det, Quadrature::x);
    r.i_ab_p = gaussian_mutual_info_quad(eff, ch, det, Quadrature::p);

    if (det == Detection::homodyne) {
        r.i_e_x = holevo_gaussian_homodyne(eff, ch, Quadrature::x);
        r.i_e_p = holevo_gaussian_homodyne(eff, ch, Quadrature::p);
        r.i_ab = 0.5 * r.p_alice_x * r.i_ab_x + 0.5 * r.p_alice_p * r.i_ab_p;
        r.i_e = 0.5 * r.p_alice_x * r.i_e_x + 0.5 * r.p_alice_p * r.i_e_p;
        r.key_rate = mod.beta * r.i_ab - r.i_e;
    } else {
        const double ie = holevo_gaussian_heterodyne(eff, ch);
        r.i_e_x = r.i_e_p = ie;
        r.i_ab = 0.5 * (r.i_ab_x + r.i_ab_p);
        r.i_e = ie;
        r.key_rate = r.p_alice_x * r.p_alice_p * (mod.beta * r.i_ab - ie);
    }
    return r;
}

inline KeyRateReport keyrate_gg02(const ModulationParams& mod, const ChannelParams& ch,
                                  Detection det) {
    return keyrate_after_alice(mod, ch, det, 0.0, 0.0);
}

// ---- Eve in Fock space ----------------------------------------------------------------

namespace detail {

struct DisplacementGridPoint {
    Cplx alpha1, alpha2;
    double weight;
    Eigen::Vector4d mu;  // conditional mean (E1x, E1p, E2x, E2p)
};

struct DisplacementGrid {
    std::vector<DisplacementGridPoint> points;
    double weight_deficit = 0.0;  // mass outside grid bounds, pre-normalization
};

// Homodyne: weights are exact interval masses of Bob's renormalized output
// density over the surviving bins flush against the notch.
inline DisplacementGrid displacement_grid_homodyne(const ModulationParams& eff,
                                                   const ChannelParams& ch, Quadrature q,
                                                   double c, const GridSpec& grid) {
    const double vb = bob_variance_homodyne(eff, ch, q);
    const double pb = bob_success_prob_homodyne(vb, c);
    const Mat42 coef = eve_mean_coefficients(eff, ch, Detection::homodyne);
    const int col = q == Quadrature::x ? 0 : 1;

    DisplacementGrid out;
    double mass = 0.0;
    std::vector<double> raw;
    const std::vector<double> centers = bob_centers_homodyne(c, grid);
    for (double xb : centers) {
        const double w =
            gaussian_interval_mass(xb - 0.5 * grid.delta, xb + 0.5 * grid.delta, vb) / pb;
        raw.push_back(w);
        mass += w;
    }
    out.weight_deficit = 1.0 - mass;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        DisplacementGridPoint pt;
        pt.mu = coef.col(col) * centers[i];
        pt.alpha1 = 0.5 * Cplx(pt.mu(0), pt.mu(1));
        pt.alpha2 = 0.5 * Cplx(pt.mu(2), pt.mu(3));
        pt.weight = raw[i] / mass;
        out.points.push_back(pt);
    }
    return out;
}

// Heterodyne: regular 2-D grid of outcome bins, surviving squares fully
// outside the disk, product-Gaussian interval masses.
inline DisplacementGrid displacement_grid_heterodyne(const ModulationParams& eff,
                                                     const ChannelParams& ch, double c,
                                                     const GridSpec& grid) {
    const double vmx = bob_variance_heterodyne_measured(eff, ch, Quadrature::x);
    const double vmp = bob_variance_heterodyne_measured(eff, ch, Quadrature::p);
    const Mat42 coef = eve_mean_coefficients(eff, ch, Detection::heterodyne);
    const std::vector<double> centers = bob_centers_heterodyne_axis(grid);
    const double h = 0.5 * grid.delta;

    DisplacementGrid out;
    double mass = 0.0;
    std::vector<double> raw;
    std::vector<std::pair<double, double>> pts;
    for (double xb : centers) {
        for (double pb : centers) {
            if (!bin_outside_disk(xb, pb, h, c)) continue;
            const double w = gaussian_interval_mass(xb - h, xb + h, vmx) *
                             gaussian_interval_mass(pb - h, pb + h, vmp);
            raw.push_back(w);
            pts.emplace_back(xb, pb);
            mass += w;
        }
    }
    if (raw.empty()) throw GridTooCoarse("no surviving heterodyne bins");
    const double pb_closed = bob_success_prob_heterodyne(
        bob_variance_heterodyne_state(eff, ch, Quadrature::x),
        bob_variance_heterodyne_state(eff, ch, Quadrature::p), c);
    out.weight_deficit = 1.0 - mass / pb_closed;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        DisplacementGridPoint pt;
        pt.mu = coef * Eigen::Vector2d(pts[i].first, pts[i].second);
        pt.alpha1 = 0.5 * Cplx(pt.mu(0), pt.mu(1));
        pt.alpha2 = 0.5 * Cplx(pt.mu(2), pt.mu(3));
        pt.weight = raw[i] / mass;
        out.points.push_back(pt);
    }
    return out;
}

struct FockRun {
    double i_e = 0.0;
    double s_avg = 0.0, s_cond = 0.0;
};

inline FockRun fock_holevo_at(const FockConstruction& fc, const DisplacementGrid& grid, int n,
                              int threads, double tail_tol) {
    const FockState rho0 = conditional_state_at_origin(fc, n, tail_tol);
    std::vector<WeightedDisplacement> terms;
    terms.reserve(grid.points.size());
    for (const auto& p : grid.points) terms.push_back({p.alpha1, p.alpha2, p.weight});
    const FockState avg = weighted_average_state(rho0, terms, threads);
    FockRun r;
    r.s_cond = von_neumann_entropy(rho0);
    r.s_avg = von_neumann_entropy(avg);
    r.i_e = r.s_avg - r.s_cond;
    return r;
}

// Gaussian-extremality reference on the filtered ensemble: the covariance of
// the displaced mixture bounds the entropy of the true (non-Gaussian) average
// state from above.
inline double extremality_bound(const Mat4& cond_cm, const DisplacementGrid& grid) {
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (const auto& p : grid.points) mean += p.weight * p.mu;
    Mat4 spread = Mat4::Zero();
    for (const auto& p : grid.points) {
        const Eigen::Vector4d d = p.mu - mean;
        spread += p.weight * d * d.transpose();
    }
    return gaussian_entropy(cond_cm + spread) - gaussian_entropy(cond_cm);
}

inline FockEveResult eve_info_fock_impl(const Mat4& cond_cm, const DisplacementGrid& grid,
                                        const FockOptions& opt, double gaussian_oracle,
                                        bool check_oracle) {
    const FockConstruction fc = fock_construction(cond_cm);
    double max_a1 = 0.0, max_a2 = 0.0;
    for (const auto& p : grid.points) {
        max_a1 = std::max(max_a1, std::abs(p.alpha1));
        max_a2 = std::max(max_a2, std::abs(p.alpha2));
    }
    const int n = opt.truncation > 0
                      ? opt.truncation
                      : choose_truncation(0.5 * (fc.lambda1 - 1.0), 0.5 * (fc.lambda2 - 1.0),
                                          max_a1, max_a2, opt.tail_tol, opt.guard, opt.cap);

    const FockRun lo = fock_holevo_at(fc, grid, n, opt.threads, 1e-2);
    const FockRun hi = fock_holevo_at(fc, grid, n + 10, opt.threads, 1e-2);

    FockEveResult res;
    res.i_e = hi.i_e;
    res.i_e_extremality = extremality_bound(cond_cm, grid);
    res.diag.n = n + 10;
    res.diag.delta_s = std::abs(hi.i_e - lo.i_e);
    res.diag.weight_deficit = grid.weight_deficit;
    res.diag.s_avg = hi.s_avg;
    res.diag.s_cond = hi.s_cond;
    res.diag.converged = res.diag.delta_s < opt.convergence_tol;

    if (check_oracle && std::abs(res.i_e - gaussian_oracle) > opt.oracle_tol)
        throw GridTooCoarse("Fock bound " + std::to_string(res.i_e) +
                            " disagrees with the Gaussian value " +
                            std::to_string(gaussian_oracle) + " at c = 0");
    return res;
}

}  // namespace detail

// Fock-space Holevo bound for one homodyne quadrature with Bob's cut-off c.
// mod must already carry the effective (post-Alice) modulation variances.
inline FockEveResult eve_info_fock_homodyne(const ModulationParams& mod, const ChannelParams& ch,
                                            Quadrature q, double c, const GridSpec& grid,
                                            const FockOptions& opt = {}) {
    grid.validate();
    const detail::DisplacementGrid dg = detail::displacement_grid_homodyne(mod, ch, q, c, grid);
    const Mat4 cond = eve_conditional_cm_homodyne(mod, ch, q);
    return detail::eve_info_fock_impl(cond, dg, opt, holevo_gaussian_homodyne(mod, ch, q),
                                      c == 0.0);
}

// Fock-space Holevo bound for the heterodyne outcome pair with radial cut-off.
inline FockEveResult eve_info_fock_heterodyne(const ModulationParams& mod,
                                              const ChannelParams& ch, double c_rad,
                                              const GridSpec& grid, const FockOptions& opt = {}) {
    grid.validate();
    const detail::DisplacementGrid dg = detail::displacement_grid_heterodyne(mod, ch, c_rad, grid);
    const Mat4 cond = eve_conditional_cm_heterodyne(mod, ch);
    return detail::eve_info_fock_impl(cond, dg, opt, holevo_gaussian_heterodyne(mod, ch),
                                      c_rad == 0.0);
}

// ---- full pipeline ----------------------------------------------------------------------

// Key rate with both filters. Quadratures with a zero cut-off keep the
// analytic Gaussian bound on Eve (the Fock value converges to it there); a
// positive cut-off switches that quadrature to the density-matrix bound.
inline KeyRateReport keyrate_after_bob(const ModulationParams& mod, const ChannelParams& ch,
                                       Detection det, const FilterSettings& fs,
                                       const GridSpec& grid, const FockOptions& opt = {}) {
    fs.validate();
    KeyRateReport r = keyrate_after_alice(mod, ch, det, fs.g_x, fs.g_p);
    const ModulationParams eff = effective_modulation(mod, fs.g_x, fs.g_p);

    if (det == Detection::homodyne) {
        for (Quadrature q : {Quadrature::x, Quadrature::p}) {
            const double c = fs.c(q);
            double& iab = q == Quadrature::x ? r.i_ab_x : r.i_ab_p;
            double& ie = q == Quadrature::x ? r.i_e_x : r.i_e_p;
            double& pb = q == Quadrature::x ? r.p_bob_x : r.p_bob_p;
            pb = bob_success_prob_homodyne(bob_variance_homodyne(eff, ch, q), c);
            if (c > 0.0) {
                iab = mi_after_bob_homodyne(eff, ch, c, grid, q).i_ab;
                const FockEveResult fe = eve_info_fock_homodyne(eff, ch, q, c, grid, opt);
                ie = fe.i_e;
                (q == Quadrature::x ? r.fock_x : r.fock_p) = fe.diag;
                r.method = "fock";
            }
        }
        r.i_ab = 0.5 * r.p_bob_x * r.p_alice_x * r.i_ab_x +
                 0.5 * r.p_bob_p * r.p_alice_p * r.i_ab_p;
        r.i_e = 0.5 * r.p_bob_x * r.p_alice_x * r.i_e_x +
                0.5 * r.p_bob_p * r.p_alice_p * r.i_e_p;
        r.key_rate = mod.beta * r.i_ab - r.i_e;
    } else {
        r.p_bob_rad = bob_success_prob_heterodyne(bob_variance_heterodyne_state(eff, ch, Quadrature::x),
                                                  bob_variance_heterodyne_state(eff, ch, Quadrature::p),
                                                  fs.c_rad);
        if (fs.c_rad > 0.0) {
            r.i_ab = mi_after_bob_heterodyne(eff, ch, fs.c_rad, grid).i_ab;
            const FockEveResult fe = eve_info_fock_heterodyne(eff, ch, fs.c_rad, grid, opt);
            r.i_e = fe.i_e;
            r.i_e_x = r.i_e_p = fe.i_e;
            r.fock_x = fe.diag;
            r.method = "fock";
        }
        r.key_rate = r.p_bob_rad * r.p_alice_x * r.p_alice_p * (mod.beta * r.i_ab - r.i_e);
    }
    return r;
}

}  // namespace cvqkd
