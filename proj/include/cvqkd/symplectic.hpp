#pragma once

// Williamson and Bloch-Messiah decompositions for two-mode covariance
// matrices, plus the symplectic builders (rotations, beamsplitter, squeezers)
// they factor into. Ordering (x1, p1, x2, p2) throughout.
//
// Williamson: s sigma s^T = diag(l1, l1, l2, l2), s symplectic, via the real
// Schur form of sigma^(1/2) Omega sigma^(1/2).
//
// Bloch-Messiah: s = s_u s_i s_v with s_u, s_v passive (rotations around a
// beamsplitter) and s_i = diag(e^-r1, e^r1, e^-r2, e^r2), r_i >= 0. Computed
// from the SVD of the annihilation-operator block in the complex
// representation; excess phases are absorbed into the rotation angles.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>

#include "cvqkd/gaussian.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

using Cplx = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;

// ---- builders ---------------------------------------------------------------

inline Mat4 rotation_pair(double theta1, double theta2) {
    Mat4 s = Mat4::Zero();
    s(0, 0) = std::cos(theta1); s(0, 1) = -std::sin(theta1);
    s(1, 0) = std::sin(theta1); s(1, 1) = std::cos(theta1);
    s(2, 2) = std::cos(theta2); s(2, 3) = -std::sin(theta2);
    s(3, 2) = std::sin(theta2); s(3, 3) = std::cos(theta2);
    return s;
}

inline Mat4 beamsplitter(double tau) {
    const double c = std::sqrt(tau), s = std::sqrt(1.0 - tau);
    Mat4 m = Mat4::Zero();
    m(0, 0) = c;  m(0, 2) = s;
    m(1, 1) = c;  m(1, 3) = s;
    m(2, 0) = -s; m(2, 2) = c;
    m(3, 1) = -s; m(3, 3) = c;
    return m;
}

inline Mat4 squeeze_pair(double r1, double r2) {
    Mat4 s = Mat4::Zero();
    s(0, 0) = std::exp(-r1); s(1, 1) = std::exp(r1);
    s(2, 2) = std::exp(-r2); s(3, 3) = std::exp(r2);
    return s;
}

struct PassiveParams {
    double theta_in1 = 0.0, theta_in2 = 0.0;   // rotations applied last
    double tau = 1.0;                          // beamsplitter transmissivity
    double theta_out1 = 0.0, theta_out2 = 0.0; // rotations applied first
};

inline Mat4 passive_matrix(const PassiveParams& p) {
    return rotation_pair(p.theta_in1, p.theta_in2) * beamsplitter(p.tau) *
           rotation_pair(p.theta_out1, p.theta_out2);
}

struct BlochMessiah {
    PassiveParams u;
    double r1 = 0.0, r2 = 0.0;
    PassiveParams v;

    Mat4 reconstruct() const {
        return passive_matrix(u) * squeeze_pair(r1, r2) * passive_matrix(v);
    }
};

// ---- Williamson --------------------------------------------------------------

struct SymplecticDecomposition {
    Mat4 s = Mat4::Identity();          // s sigma s^T = omega
    double lambda1 = 1.0, lambda2 = 1.0; // symplectic eigenvalues, l1 >= l2

    Mat4 omega_diag() const {
        Mat4 d = Mat4::Zero();
        d(0, 0) = d(1, 1) = lambda1;
        d(2, 2) = d(3, 3) = lambda2;
        return d;
    }
};

inline Mat4 symplectic_inverse(const Mat4& s) {
    const Mat4 om = symplectic_form(2);
    return om.transpose() * s.transpose() * om;
}

inline SymplecticDecomposition williamson(const Mat4& cm) {
    Eigen::SelfAdjointEigenSolver<Mat4> es(cm);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw NonPhysicalState("covariance matrix not positive definite");
    const Mat4 root = es.operatorSqrt();
    const Mat4 root_inv = es.operatorInverseSqrt();

    const Mat4 a = root * symplectic_form(2) * root;  // antisymmetric
    Eigen::RealSchur<Mat4> schur(a);
    Mat4 q = schur.matrixU();
    Mat4 t = schur.matrixT();

    // enforce +lambda in the upper corner of each 2x2 block, sort descending
    std::array<double, 2> lam{};
    std::array<int, 2> pos{0, 2};
    for (int k = 0; k < 2; ++k) {
        const int i = pos[k];
        double b = t(i, i + 1);
        if (b < 0.0) {
            q.col(i).swap(q.col(i + 1));
            b = -b;
        }
        lam[k] = b;
    }
    if (lam[0] < lam[1]) {
        q.col(0).swap(q.col(2));
        q.col(1).swap(q.col(3));
        std::swap(lam[0], lam[1]);
    }
    for (double& l : lam) {
        if (l < 1.0 - 1e-6)
            throw NonPhysicalState("Williamson eigenvalue " + std::to_string(l) + " < 1");
        l = std::max(l, 1.0);
    }

    SymplecticDecomposition d;
    d.lambda1 = lam[0];
    d.lambda2 = lam[1];
    Mat4 droot = Mat4::Zero();
    droot(0, 0) = droot(1, 1) = std::sqrt(lam[0]);
    droot(2, 2) = droot(3, 3) = std::sqrt(lam[1]);
    d.s = droot * q.transpose() * root_inv;

    const Mat4 om = symplectic_form(2);
    if ((d.s * om * d.s.transpose() - om).cwiseAbs().maxCoeff() > 1e-9)
        throw DecompositionError("Williamson output not symplectic");
    if ((d.s * cm * d.s.transpose() - d.omega_diag()).cwiseAbs().maxCoeff() > 1e-8)
        throw DecompositionError("Williamson reconstruction failed");
    return d;
}

// ---- Bloch-Messiah ------------------------------------------------------------

namespace detail {

// complex (E, F) representation of a symplectic matrix: a' = E a + F a^dag
inline void to_complex_blocks(const Mat4& s, Mat2c& e, Mat2c& f) {
    // permute (x1,p1,x2,p2) -> (x1,x2 | p1,p2)
    Eigen::Matrix2d axx, axp, apx, app;
    const int ix[2] = {0, 2}, ip[2] = {1, 3};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            axx(i, j) = s(ix[i], ix[j]);
            axp(i, j) = s(ix[i], ip[j]);
            apx(i, j) = s(ip[i], ix[j]);
            app(i, j) = s(ip[i], ip[j]);
        }
    e = 0.5 * (axx + app).cast<Cplx>() + Cplx(0, 0.5) * (apx - axp).cast<Cplx>();
    f = 0.5 * (axx - app).cast<Cplx>() + Cplx(0, 0.5) * (apx + axp).cast<Cplx>();
}

// xpxp symplectic of a passive transformation given its U(2) matrix
inline Mat4 passive_from_unitary(const Mat2c& u) {
    Mat4 s;
    const int ix[2] = {0, 2}, ip[2] = {1, 3};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            s(ix[i], ix[j]) = u(i, j).real();
            s(ix[i], ip[j]) = -u(i, j).imag();
            s(ip[i], ix[j]) = u(i, j).imag();
            s(ip[i], ip[j]) = u(i, j).real();
        }
    return s;
}

// factor u = R(t1,t2) B(tau) R(t3,t4); one gauge angle fixed to zero
inline PassiveParams unitary_angles(const Mat2c& u) {
    PassiveParams p;
    const double a00 = std::abs(u(0, 0));
    p.tau = std::min(1.0, std::max(0.0, a00 * a00));
    const double edge = 1e-12;
    if (p.tau >= 1.0 - edge) {
        p.tau = 1.0;
        p.theta_in1 = std::arg(u(0, 0));
        p.theta_in2 = std::arg(u(1, 1));
        return p;
    }
    if (p.tau <= edge) {
        p.tau = 0.0;
        p.theta_in1 = std::arg(u(0, 1));
        p.theta_in2 = std::arg(-u(1, 0));
        return p;
    }
    p.theta_out1 = 0.0;
    p.theta_in1 = std::arg(u(0, 0));
    p.theta_out2 = std::arg(u(0, 1)) - p.theta_in1;
    p.theta_in2 = std::arg(-u(1, 0));
    return p;
}

}  // namespace detail

namespace detail {

inline BlochMessiah bm_from_basis(Mat2c u, Mat2c v, const Eigen::Vector2d& sing,
                                  const Mat2c& f) {
    // per-mode phases chosen so the sinh block is negative real, giving
    // s_i = diag(e^-r, e^r) per mode with r >= 0
    Mat2c w = u.adjoint() * f * v.conjugate();
    for (int k = 0; k < 2; ++k) {
        const double phi =
            std::abs(w(k, k)) > 1e-13 ? 0.5 * std::arg(w(k, k)) + 0.5 * kPi : 0.0;
        const Cplx ph = std::exp(Cplx(0, phi));
        u.col(k) *= ph;
        v.col(k) *= ph;
    }
    BlochMessiah bm;
    bm.r1 = std::acosh(std::max(1.0, sing(0)));
    bm.r2 = std::acosh(std::max(1.0, sing(1)));
    bm.u = unitary_angles(u);
    bm.v = unitary_angles(v.adjoint());
    return bm;
}

}  // namespace detail

inline BlochMessiah bloch_messiah(const Mat4& s) {
    const Mat4 om = symplectic_form(2);
    if ((s * om * s.transpose() - om).cwiseAbs().maxCoeff() > 1e-9)
        throw DecompositionError("input matrix is not symplectic");

    Mat2c e, f;
    detail::to_complex_blocks(s, e, f);

    Eigen::JacobiSVD<Mat2c> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat2c u = svd.matrixU();
    const Mat2c v = svd.matrixV();
    const Eigen::Vector2d sing = svd.singularValues();

    Mat2c w = u.adjoint() * f * v.conjugate();
    w = 0.5 * (w + w.transpose()).eval();  // symmetric up to round-off

    // Distinct singular values force w diagonal; degenerate ones leave the
    // SVD basis free and w must be rotated into its Takagi basis. Near the
    // degeneracy both routes carry O(gap) error in opposite regimes, so keep
    // whichever reconstructs better.
    BlochMessiah best = detail::bm_from_basis(u, v, sing, f);
    double best_res = (best.reconstruct() - s).cwiseAbs().maxCoeff();
    if (std::abs(w(0, 1)) > 1e-12) {
        Eigen::SelfAdjointEigenSolver<Mat2c> tk(w * w.conjugate());
        const Mat2c qq = tk.eigenvectors();
        const BlochMessiah cand = detail::bm_from_basis(u * qq, v * qq, sing, f);
        const double res = (cand.reconstruct() - s).cwiseAbs().maxCoeff();
        if (res < best_res) {
            best = cand;
            best_res = res;
        }
    }
    if (best_res > 1e-8)
        throw DecompositionError("Bloch-Messiah reconstruction residual " +
                                 std::to_string(best_res));
    return best;
}

// Decomposition of a covariance matrix into the data needed to build the
// corresponding density matrix: thermal occupations from the Williamson
// eigenvalues and the Bloch-Messiah factorization of the matrix m = s^-1
// that carries diag(l1,l1,l2,l2) back to the covariance.
struct FockConstruction {
    double lambda1 = 1.0, lambda2 = 1.0;
    BlochMessiah bm;  // factorization of s^-1
};

inline FockConstruction fock_construction(const Mat4& cm) {
    const SymplecticDecomposition wd = williamson(cm);
    FockConstruction fc;
    fc.lambda1 = wd.lambda1;
    fc.lambda2 = wd.lambda2;
    fc.bm = bloch_messiah(symplectic_inverse(wd.s));
    return fc;
}

}  // namespace cvqkd
