#pragma once

// Truncated two-mode Fock-space engine: thermal states, Gaussian unitaries
// assembled from rotation/beamsplitter/squeezer/displacement primitives,
// displaced-state averaging and von Neumann entropies.
//
// Two-mode kets are indexed n1 * N + n2 with per-mode truncation N. All
// primitives are built by exponentiating the truncated generator (done via a
// Hermitian eigendecomposition, which is exact for the truncated matrix).

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <thread>
#include <variant>
#include <vector>

#include "cvqkd/math.hpp"
#include "cvqkd/symplectic.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

using MatXc = Eigen::MatrixXcd;
using VecX = Eigen::VectorXd;

struct FockState {
    int n = 0;          // per-mode truncation
    MatXc rho;          // n^2 x n^2, Hermitian, trace <= 1 (deficit recorded)

    double trace() const { return rho.trace().real(); }
    double trace_deficit() const { return 1.0 - trace(); }
    double purity() const { return (rho * rho).trace().real(); }
};

// ---- single-mode primitives --------------------------------------------------

inline MatXc annihilation_op(int n) {
    MatXc a = MatXc::Zero(n, n);
    for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    return a;
}

// exp(i H) for Hermitian H
inline MatXc unitary_from_hermitian(const MatXc& h) {
    Eigen::SelfAdjointEigenSolver<MatXc> es(h);
    MatXc phases = (Cplx(0, 1) * es.eigenvalues().array().cast<Cplx>()).exp().matrix().asDiagonal();
    return es.eigenvectors() * phases * es.eigenvectors().adjoint();
}

inline MatXc rotation_gate(double theta, int n) {
    MatXc u = MatXc::Zero(n, n);
    for (int k = 0; k < n; ++k) u(k, k) = std::exp(Cplx(0, theta * k));
    return u;
}

// D(alpha) = exp(alpha a^dag - conj(alpha) a)
inline MatXc displacement_gate(Cplx alpha, int n) {
    const MatXc a = annihilation_op(n);
    const MatXc k = alpha * a.adjoint() - std::conj(alpha) * a;
    return unitary_from_hermitian(Cplx(0, -1) * k);
}

// S(r) = exp(r/2 (a^2 - a^dag^2)); maps x -> e^-r x, p -> e^r p
inline MatXc squeeze_gate(double r, int n) {
    const MatXc a = annihilation_op(n);
    const MatXc k = 0.5 * r * (a * a - (a * a).adjoint());
    return unitary_from_hermitian(Cplx(0, -1) * k);
}

// ---- two-mode primitives -------------------------------------------------------

// exp(theta (a^dag b - a b^dag)) with cos(theta) = sqrt(tau); block diagonal in
// total photon number, exponentiated sector by sector.
inline MatXc beamsplitter_gate(double tau, int n) {
    const double theta = std::atan2(std::sqrt(std::max(0.0, 1.0 - tau)), std::sqrt(tau));
    MatXc u = MatXc::Zero(n * n, n * n);
    for (int tot = 0; tot <= 2 * (n - 1); ++tot) {
        const int kmin = std::max(0, tot - (n - 1));
        const int kmax = std::min(tot, n - 1);
        const int d = kmax - kmin + 1;
        MatXc h = MatXc::Zero(d, d);  // -i * generator, Hermitian
        for (int k = kmin; k < kmax; ++k) {
            const double c = theta * std::sqrt(static_cast<double>(k + 1) * (tot - k));
            h(k + 1 - kmin, k - kmin) = Cplx(0, -c);
            h(k - kmin, k + 1 - kmin) = Cplx(0, c);
        }
        const MatXc us = unitary_from_hermitian(h);
        for (int k = kmin; k <= kmax; ++k)
            for (int l = kmin; l <= kmax; ++l)
                u(k * n + (tot - k), l * n + (tot - l)) = us(k - kmin, l - kmin);
    }
    return u;
}

inline MatXc kron(const MatXc& a, const MatXc& b) {
    const int na = static_cast<int>(a.rows()), nb = static_cast<int>(b.rows());
    MatXc out(na * nb, na * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j)
            out.block(i * nb, j * nb, nb, nb) = a(i, j) * b;
    return out;
}

// (A (x) B) * m for single-mode A, B without forming the Kronecker product
inline MatXc kron_apply_left(const MatXc& a, const MatXc& b, const MatXc& m) {
    const int n = static_cast<int>(a.rows());
    const int cols = static_cast<int>(m.cols());
    MatXc t(n * n, cols);
    for (int j1 = 0; j1 < n; ++j1)
        t.middleRows(j1 * n, n).noalias() = b * m.middleRows(j1 * n, n);
    MatXc z = MatXc::Zero(n * n, cols);
    for (int i1 = 0; i1 < n; ++i1)
        for (int j1 = 0; j1 < n; ++j1)
            if (a(i1, j1) != Cplx(0, 0))
                z.middleRows(i1 * n, n).noalias() += a(i1, j1) * t.middleRows(j1 * n, n);
    return z;
}

// (A (x) B) rho (A (x) B)^dag
inline MatXc kron_sandwich(const MatXc& a, const MatXc& b, const MatXc& rho) {
    const MatXc z = kron_apply_left(a, b, rho);
    return kron_apply_left(a, b, z.adjoint()).adjoint();
}

// ---- gate plans ----------------------------------------------------------------

struct GateRotation { int mode; double theta; };
struct GateBeamsplitter { double tau; };
struct GateSqueeze { int mode; double r; };
struct GateDisplace { int mode; Cplx alpha; };
using Gate = std::variant<GateRotation, GateBeamsplitter, GateSqueeze, GateDisplace>;
using GaussianUnitaryPlan = std::vector<Gate>;  // listed in application order

inline MatXc gate_matrix(const Gate& g, int n) {
    const MatXc id = MatXc::Identity(n, n);
    if (const auto* r = std::get_if<GateRotation>(&g)) {
        const MatXc m = rotation_gate(r->theta, n);
        return r->mode == 0 ? kron(m, id) : kron(id, m);
    }
    if (const auto* b = std::get_if<GateBeamsplitter>(&g))
        return beamsplitter_gate(b->tau, n);
    if (const auto* s = std::get_if<GateSqueeze>(&g)) {
        const MatXc m = squeeze_gate(s->r, n);
        return s->mode == 0 ? kron(m, id) : kron(id, m);
    }
    const auto& d = std::get<GateDisplace>(g);
    const MatXc m = displacement_gate(d.alpha, n);
    return d.mode == 0 ? kron(m, id) : kron(id, m);
}

// Column norms of a truncated unitary decay near the truncation edge; inside
// the guard band they must stay near 1.
inline void check_truncated_unitary(const MatXc& u, int n, int guard, double tol) {
    const int lim = std::max(0, n - guard);
    for (int j1 = 0; j1 < lim; ++j1)
        for (int j2 = 0; j2 < lim; ++j2) {
            const double nrm = u.col(j1 * n + j2).norm();
            if (std::abs(nrm - 1.0) > tol)
                throw TruncationError("unitary column (" + std::to_string(j1) + "," +
                                      std::to_string(j2) + ") norm " + std::to_string(nrm));
        }
}

inline MatXc build_unitary(const GaussianUnitaryPlan& plan, int n) {
    MatXc u = MatXc::Identity(n * n, n * n);
    for (const Gate& g : plan) u = (gate_matrix(g, n) * u).eval();
    return u;
}

// ---- states ---------------------------------------------------------------------

// geometric thermal weights; not renormalized, the truncated tail is the
// recorded deficit
inline VecX thermal_weights(double nbar, int n, double tail_tol = 1e-4) {
    if (nbar < 0.0) throw InvalidParams("nbar must be >= 0");
    VecX w = VecX::Zero(n);
    if (nbar == 0.0) {
        w(0) = 1.0;
        return w;
    }
    const double q = nbar / (nbar + 1.0);
    const double tail = std::pow(q, n);
    if (tail > tail_tol)
        throw TruncationError("thermal tail mass " + std::to_string(tail) + " above tolerance");
    double p = 1.0 / (nbar + 1.0);
    for (int k = 0; k < n; ++k) {
        w(k) = p;
        p *= q;
    }
    return w;
}

inline FockState thermal_state(double nbar, int n, double tail_tol = 1e-4) {
    FockState st;
    st.n = n;
    st.rho = thermal_weights(nbar, n, tail_tol).cast<Cplx>().asDiagonal();
    return st;
}

// Gaussian unitary for a Bloch-Messiah factorization. The passive blocks are
// a diagonal rotation layer around one dense beamsplitter, so the only large
// products are one kron-apply and one matrix multiply.
inline MatXc bloch_messiah_unitary(const BlochMessiah& bm, int n) {
    auto passive = [&](const PassiveParams& p) {
        MatXc m = beamsplitter_gate(p.tau, n);
        const MatXc rin1 = rotation_gate(p.theta_in1, n), rin2 = rotation_gate(p.theta_in2, n);
        const MatXc rout1 = rotation_gate(p.theta_out1, n), rout2 = rotation_gate(p.theta_out2, n);
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < n; ++i2) {
                m.row(i1 * n + i2) *= rin1(i1, i1) * rin2(i2, i2);
                m.col(i1 * n + i2) *= rout1(i1, i1) * rout2(i2, i2);
            }
        return m;
    };
    const MatXc pv = passive(bm.v);
    const MatXc z = kron_apply_left(squeeze_gate(bm.r1, n), squeeze_gate(bm.r2, n), pv);
    const MatXc pu = passive(bm.u);
    return pu * z;
}

// rho = S Lambda S^dag with Lambda the two-mode thermal state of the
// Williamson eigenvalues; covariance of the result reproduces the matrix the
// construction was derived from (up to truncation).
inline FockState conditional_state_at_origin(const FockConstruction& fc, int n,
                                             double tail_tol = 1e-2) {
    const VecX w1 = thermal_weights(0.5 * (fc.lambda1 - 1.0), n, tail_tol);
    const VecX w2 = thermal_weights(0.5 * (fc.lambda2 - 1.0), n, tail_tol);
    VecX w(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i * n + j) = w1(i) * w2(j);
    MatXc a = bloch_messiah_unitary(fc.bm, n);
    for (int j = 0; j < n * n; ++j) a.col(j) *= std::sqrt(w(j));
    FockState st;
    st.n = n;
    st.rho.noalias() = a * a.adjoint();
    return st;
}

inline FockState displace(const FockState& st, Cplx alpha1, Cplx alpha2) {
    FockState out;
    out.n = st.n;
    out.rho = kron_sandwich(displacement_gate(alpha1, st.n), displacement_gate(alpha2, st.n),
                            st.rho);
    return out;
}

inline double von_neumann_entropy(const FockState& st) {
    const MatXc h = 0.5 * (st.rho + st.rho.adjoint());
    Eigen::SelfAdjointEigenSolver<MatXc> es(h, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()(i);
        if (p < -1e-6) throw NonPhysicalState("density matrix eigenvalue " + std::to_string(p));
        if (p > 1e-14) s -= p * std::log2(p);
    }
    return s;
}

struct WeightedDisplacement {
    Cplx alpha1;
    Cplx alpha2;
    double weight;
};

// Convex mixture of displaced copies of rho0. Displaced states are computed
// in parallel batches; accumulation is serial in grid order so the result is
// independent of the thread count.
inline FockState weighted_average_state(const FockState& rho0,
                                        const std::vector<WeightedDisplacement>& terms,
                                        int threads = 1) {
    double wsum = 0.0;
    for (const auto& t : terms) {
        if (t.weight < 0.0) throw WeightError("negative weight");
        wsum += t.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw WeightError("weights sum to " + std::to_string(wsum));

    FockState avg;
    avg.n = rho0.n;
    avg.rho = MatXc::Zero(rho0.rho.rows(), rho0.rho.cols());
    threads = std::max(1, threads);
    std::vector<MatXc> slot(threads);
    for (std::size_t base = 0; base < terms.size(); base += threads) {
        const int batch = static_cast<int>(std::min<std::size_t>(threads, terms.size() - base));
        auto work = [&](int k) {
            const auto& t = terms[base + k];
            if (t.alpha1 == Cplx(0, 0) && t.alpha2 == Cplx(0, 0))
                slot[k] = rho0.rho;
            else
                slot[k] = kron_sandwich(displacement_gate(t.alpha1, rho0.n),
                                        displacement_gate(t.alpha2, rho0.n), rho0.rho);
        };
        if (batch == 1) {
            work(0);
        } else {
            std::vector<std::thread> pool;
            for (int k = 0; k < batch; ++k) pool.emplace_back(work, k);
            for (auto& th : pool) th.join();
        }
        for (int k = 0; k < batch; ++k) avg.rho += terms[base + k].weight * slot[k];
    }
    return avg;
}

// ---- moments ---------------------------------------------------------------------

struct TwoModeMoments {
    Eigen::Vector4d mean;  // (x1, p1, x2, p2)
    Mat4 cov;
};

// First and second quadrature moments of a (possibly trace-deficient) state;
// moments are normalized by the actual trace.
inline TwoModeMoments state_moments(const FockState& st) {
    const int n = st.n;
    const MatXc a = annihilation_op(n);
    const MatXc x = a + a.adjoint();
    const MatXc p = Cplx(0, -1) * (a - a.adjoint());
    const MatXc ops[2] = {x, p};

    // reduced density matrices
    MatXc r1 = MatXc::Zero(n, n), r2 = MatXc::Zero(n, n);
    for (int i1 = 0; i1 < n; ++i1)
        for (int j1 = 0; j1 < n; ++j1)
            for (int k = 0; k < n; ++k) {
                r1(i1, j1) += st.rho(i1 * n + k, j1 * n + k);
                r2(i1, j1) += st.rho(k * n + i1, k * n + j1);
            }
    const double tr = r1.trace().real();

    auto single = [&](const MatXc& op, const MatXc& red) {
        return (op * red).trace().real() / tr;
    };
    auto single2 = [&](const MatXc& o1, const MatXc& o2, const MatXc& red) {
        return 0.5 * ((o1 * o2 + o2 * o1) * red).trace().real() / tr;
    };
    // cross moment <A (x) B> via one partial contraction
    auto cross = [&](const MatXc& oa, const MatXc& ob) {
        Cplx s = 0;
        for (int i1 = 0; i1 < n; ++i1)
            for (int j1 = 0; j1 < n; ++j1) {
                if (oa(i1, j1) == Cplx(0, 0)) continue;
                Cplx c = 0;
                for (int i2 = 0; i2 < n; ++i2)
                    for (int j2 = 0; j2 < n; ++j2)
                        if (ob(i2, j2) != Cplx(0, 0)) c += ob(i2, j2) * st.rho(j1 * n + j2, i1 * n + i2);
                s += oa(i1, j1) * c;
            }
        return s.real() / tr;
    };

    TwoModeMoments m;
    m.mean << single(x, r1), single(p, r1), single(x, r2), single(p, r2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            m.cov(i, j) = single2(ops[i], ops[j], r1) - m.mean(i) * m.mean(j);
            m.cov(2 + i, 2 + j) = single2(ops[i], ops[j], r2) - m.mean(2 + i) * m.mean(2 + j);
            const double c = cross(ops[i], ops[j]) - m.mean(i) * m.mean(2 + j);
            m.cov(i, 2 + j) = c;
            m.cov(2 + j, i) = c;
        }
    return m;
}

// ---- truncation policy --------------------------------------------------------------

inline double poisson_tail(double mean, int n) {
    if (mean <= 0.0) return 0.0;
    double pmf = std::exp(-mean), cdf = 0.0;
    for (int k = 0; k < n; ++k) {
        cdf += pmf;
        pmf *= mean / (k + 1);
    }
    return std::max(0.0, 1.0 - cdf);
}

// Smallest N with predicted tail mass (thermal + displacement) below tol,
// plus a guard band.
inline int choose_truncation(double nbar1, double nbar2, double max_a1, double max_a2,
                             double tol = 1e-4, int guard = 8, int cap = 160) {
    auto mode_mean = [](double nbar, double a) {
        return nbar + a * a + 2.0 * a * std::sqrt(nbar);
    };
    const double m1 = mode_mean(nbar1, max_a1), m2 = mode_mean(nbar2, max_a2);
    const double q1 = nbar1 / (nbar1 + 1.0), q2 = nbar2 / (nbar2 + 1.0);
    for (int n = 4; n <= cap; ++n) {
        const double tail = std::pow(q1, n) + std::pow(q2, n) + poisson_tail(m1, n) +
                            poisson_tail(m2, n);
        if (tail < tol) return n + guard;
    }
    throw TruncationError("required truncation exceeds cap " + std::to_string(cap));
}

}  // namespace cvqkd
