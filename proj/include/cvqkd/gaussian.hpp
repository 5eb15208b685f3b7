#pragma once

// Covariance-matrix model of the thermal-loss channel with trusted
// preparation noise: Alice/Bob EB covariance, Eve's average and conditional
// states under the entangling-cloner attack, symplectic spectra, Gaussian
// entropies, Holevo bounds and analytic mutual information.
//
// Two-mode matrices are ordered (x1, p1, x2, p2). For the Alice-Bob matrix
// mode 1 is Alice, mode 2 is Bob; for Eve's matrix mode 1 is the beamsplitter
// output she keeps and mode 2 the retained TMSV arm.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "cvqkd/math.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

inline Eigen::MatrixXd symplectic_form(int n_modes) {
    Eigen::MatrixXd om = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 0; k < n_modes; ++k) {
        om(2 * k, 2 * k + 1) = 1.0;
        om(2 * k + 1, 2 * k) = -1.0;
    }
    return om;
}

// min eigenvalue of sigma + i*Omega; >= -tol for a bona fide state
inline double bona_fide_margin(const Eigen::MatrixXd& cm) {
    const int n = static_cast<int>(cm.rows()) / 2;
    Eigen::MatrixXcd h = cm.cast<std::complex<double>>();
    h += std::complex<double>(0.0, 1.0) * symplectic_form(n).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Absolute eigenvalues of i*Omega*sigma, deduplicated to one per mode and
// sorted descending. Values within 1e-6 below 1 are clamped to 1.
inline std::vector<double> symplectic_eigenvalues(const Eigen::MatrixXd& cm) {
    const int n = static_cast<int>(cm.rows()) / 2;
    Eigen::EigenSolver<Eigen::MatrixXd> es(symplectic_form(n) * cm, false);
    std::vector<double> all(2 * n);
    for (int i = 0; i < 2 * n; ++i) all[i] = std::abs(es.eigenvalues()[i]);
    std::sort(all.begin(), all.end(), std::greater<double>());
    std::vector<double> lam(n);
    for (int k = 0; k < n; ++k) {
        double v = 0.5 * (all[2 * k] + all[2 * k + 1]);
        if (v < 1.0 - 1e-6)
            throw NonPhysicalState("symplectic eigenvalue " + std::to_string(v) + " < 1");
        lam[k] = std::max(v, 1.0);
    }
    return lam;
}

inline double gaussian_entropy(const Eigen::MatrixXd& cm) {
    double s = 0.0;
    for (double lam : symplectic_eigenvalues(cm)) s += gaussian_g(lam);
    return s;
}

// ---- channel moments -------------------------------------------------------

// V_b = T(V + xi) + (1-T)W with V = vmod + 1  (homodyne state variance)
inline double bob_variance_homodyne(const ModulationParams& mod, const ChannelParams& ch,
                                    Quadrature q) {
    const double v = mod.vmod(q) + 1.0;
    return ch.t * (v + ch.xi(q)) + (1.0 - ch.t) * ch.w(q);
}

// measured heterodyne variance, including detector efficiency and noise
inline double bob_variance_heterodyne_measured(const ModulationParams& mod,
                                               const ChannelParams& ch, Quadrature q) {
    const double v = mod.vmod(q) + 1.0;
    return 0.5 * (ch.eta * ch.t * (v + ch.xi(q)) + ch.eta * (1.0 - ch.t) * ch.w(q) +
                  (1.0 - ch.eta) + 1.0) +
           ch.xi_d(q);
}

// state variance seen by the security analysis: V_b = 2 V_b^m - 1
inline double bob_variance_heterodyne_state(const ModulationParams& mod, const ChannelParams& ch,
                                            Quadrature q) {
    return 2.0 * bob_variance_heterodyne_measured(mod, ch, q) - 1.0;
}

inline double bob_variance(const ModulationParams& mod, const ChannelParams& ch,
                           Detection det, Quadrature q) {
    return det == Detection::homodyne ? bob_variance_homodyne(mod, ch, q)
                                      : bob_variance_heterodyne_state(mod, ch, q);
}

// EB Alice-Bob correlation: sqrt(T(V^2-1)), with the extra sqrt(eta) for
// heterodyne detection
inline double ab_correlation(const ModulationParams& mod, const ChannelParams& ch,
                             Detection det, Quadrature q) {
    const double v = mod.vmod(q) + 1.0;
    const double t_eff = det == Detection::homodyne ? ch.t : ch.eta * ch.t;
    return std::sqrt(t_eff * (v * v - 1.0));
}

// 4x4 EB covariance matrix of the Alice-Bob state; the p correlation carries
// the TMSV minus sign.
inline Mat4 eb_covariance(const ModulationParams& mod, const ChannelParams& ch, Detection det) {
    mod.validate();
    ch.validate();
    const double vx = mod.vmod_x + 1.0, vp = mod.vmod_p + 1.0;
    const double cx = ab_correlation(mod, ch, det, Quadrature::x);
    const double cp = ab_correlation(mod, ch, det, Quadrature::p);
    Mat4 cm;
    cm << vx, 0, cx, 0,
          0, vp, 0, -cp,
          cx, 0, bob_variance(mod, ch, det, Quadrature::x), 0,
          0, -cp, 0, bob_variance(mod, ch, det, Quadrature::p);
    return cm;
}

// ---- Eve -------------------------------------------------------------------

// Squeezing parameters of Eve's two-mode purifying resource for asymmetric
// thermal noise (W_x, W_p), and the resulting cross covariances. At
// W_x = W_p = W this reduces to a single TMSV with c_ex = c_ep = -sqrt(W^2-1).
struct EveSqueezing {
    double r1 = 0.0;
    double r2 = 0.0;
    double c_ex = 0.0;
    double c_ep = 0.0;
};

inline EveSqueezing eve_squeezing(double w_x, double w_p) {
    const double arg = w_x * w_x - w_x / w_p;
    if (arg < -1e-12)
        throw AsymmetryError("no TMSV purification for W_x=" + std::to_string(w_x) +
                             ", W_p=" + std::to_string(w_p));
    EveSqueezing s;
    s.r1 = 0.5 * std::log(w_x + std::sqrt(std::max(arg, 0.0)));
    s.r2 = 0.5 * std::log(w_x / w_p) - s.r1;
    s.c_ex = 0.5 * (-std::exp(2.0 * s.r1) + std::exp(2.0 * s.r2));
    s.c_ep = 0.5 * (-std::exp(-2.0 * s.r1) + std::exp(-2.0 * s.r2));
    return s;
}

// Eve's average covariance matrix after the channel. The E1-E2 cross block
// picks up sqrt(T) from the beamsplitter acting on E1; without it the
// conditional state below comes out non-physical.
inline Mat4 eve_average_cm(const ModulationParams& mod, const ChannelParams& ch) {
    mod.validate();
    ch.validate();
    const EveSqueezing s = eve_squeezing(ch.w_x, ch.w_p);
    const double st = std::sqrt(ch.t);
    const double ve1x = ch.t * ch.w_x + (1.0 - ch.t) * (mod.vmod_x + 1.0 + ch.xi_x);
    const double ve1p = ch.t * ch.w_p + (1.0 - ch.t) * (mod.vmod_p + 1.0 + ch.xi_p);
    Mat4 cm;
    cm << ve1x, 0, st * s.c_ex, 0,
          0, ve1p, 0, st * s.c_ep,
          st * s.c_ex, 0, ch.w_x, 0,
          0, st * s.c_ep, 0, ch.w_p;
    return cm;
}

// sigma_c: covariances between Eve's modes (rows: E1x, E1p, E2x, E2p) and
// Bob's mode (columns: x, p). Heterodyne picks up sqrt(eta) from the
// detection beamsplitter.
inline Mat42 eve_bob_cov(const ModulationParams& mod, const ChannelParams& ch, Detection det) {
    const EveSqueezing s = eve_squeezing(ch.w_x, ch.w_p);
    const double e = det == Detection::heterodyne ? ch.eta : 1.0;
    const double f1 = std::sqrt(e * ch.t * (1.0 - ch.t));
    const double f2 = std::sqrt(e * (1.0 - ch.t));
    Mat42 sc;
    sc << f1 * (ch.w_x - (mod.vmod_x + 1.0 + ch.xi_x)), 0,
          0, f1 * (ch.w_p - (mod.vmod_p + 1.0 + ch.xi_p)),
          f2 * s.c_ex, 0,
          0, f2 * s.c_ep;
    return sc;
}

// Eve's covariance conditioned on Bob's homodyne outcome along q. Independent
// of the outcome value.
inline Mat4 eve_conditional_cm_homodyne(const ModulationParams& mod, const ChannelParams& ch,
                                        Quadrature q) {
    const Mat4 avg = eve_average_cm(mod, ch);
    const Mat42 sc = eve_bob_cov(mod, ch, Detection::homodyne);
    const int col = q == Quadrature::x ? 0 : 1;
    const double vb = bob_variance_homodyne(mod, ch, q);
    return avg - (sc.col(col) * sc.col(col).transpose()) / vb;
}

// Eve's covariance conditioned on Bob's heterodyne outcome (both
// quadratures). Schur complement against diag(V_bx+1, V_bp+1); reduces to the
// single-denominator form when the quadratures are symmetric.
inline Mat4 eve_conditional_cm_heterodyne(const ModulationParams& mod, const ChannelParams& ch) {
    const Mat4 avg = eve_average_cm(mod, ch);
    const Mat42 sc = eve_bob_cov(mod, ch, Detection::heterodyne);
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    d(0, 0) = 1.0 / (bob_variance_heterodyne_state(mod, ch, Quadrature::x) + 1.0);
    d(1, 1) = 1.0 / (bob_variance_heterodyne_state(mod, ch, Quadrature::p) + 1.0);
    return avg - sc * d * sc.transpose();
}

// Coefficients giving Eve's conditional mean vector (E1x, E1p, E2x, E2p) as
// M * (x_b, p_b); homodyne conditioning uses one column at a time.
inline Mat42 eve_mean_coefficients(const ModulationParams& mod, const ChannelParams& ch,
                                   Detection det) {
    const Mat42 sc = eve_bob_cov(mod, ch, det);
    Eigen::Matrix2d d = Eigen::Matrix2d::Zero();
    if (det == Detection::homodyne) {
        d(0, 0) = 1.0 / bob_variance_homodyne(mod, ch, Quadrature::x);
        d(1, 1) = 1.0 / bob_variance_homodyne(mod, ch, Quadrature::p);
        return sc * d;
    }
    d(0, 0) = 1.0 / bob_variance_heterodyne_measured(mod, ch, Quadrature::x);
    d(1, 1) = 1.0 / bob_variance_heterodyne_measured(mod, ch, Quadrature::p);
    return (sc / std::sqrt(2.0)) * d;
}

// ---- information quantities -------------------------------------------------

// Holevo bound on Eve's information given Bob's homodyne measurement of q.
inline double holevo_gaussian_homodyne(const ModulationParams& mod, const ChannelParams& ch,
                                       Quadrature q) {
    const double s_avg = gaussian_entropy(eve_average_cm(mod, ch));
    const double s_cond = gaussian_entropy(eve_conditional_cm_homodyne(mod, ch, q));
    return s_avg - s_cond;
}

// Holevo bound on Eve's information given Bob's heterodyne outcome pair.
inline double holevo_gaussian_heterodyne(const ModulationParams& mod, const ChannelParams& ch) {
    const double s_avg = gaussian_entropy(eve_average_cm(mod, ch));
    const double s_cond = gaussian_entropy(eve_conditional_cm_heterodyne(mod, ch));
    return s_avg - s_cond;
}

// Analytic Alice-Bob mutual information for one quadrature.
inline double gaussian_mutual_info_quad(const ModulationParams& mod, const ChannelParams& ch,
                                        Detection det, Quadrature q) {
    const double v = mod.vmod(q) + 1.0;
    const double va = 0.5 * (v + 1.0);
    const double c = ab_correlation(mod, ch, det, q);
    double va_cond;
    if (det == Detection::homodyne) {
        va_cond = va - c * c / (2.0 * bob_variance_homodyne(mod, ch, q));
    } else {
        va_cond = va - c * c / (4.0 * bob_variance_heterodyne_measured(mod, ch, q));
    }
    if (va_cond <= 0.0) throw NonPhysicalState("conditional variance <= 0");
    return 0.5 * std::log2(va / va_cond);
}

// Quadrature-averaged mutual information, I = (I_x + I_p)/2.
inline double gaussian_mutual_info(const ModulationParams& mod, const ChannelParams& ch,
                                   Detection det) {
    return 0.5 * (gaussian_mutual_info_quad(mod, ch, det, Quadrature::x) +
                  gaussian_mutual_info_quad(mod, ch, det, Quadrature::p));
}

}  // namespace cvqkd
