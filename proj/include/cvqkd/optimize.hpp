#pragma once

// Deterministic derivative-free searches over filter parameters and the GG02
// modulation variance: coarse grid, then coordinate descent with shrinking
// steps. Ties break toward smaller parameter values so repeated runs agree
// bit for bit.

#include <array>
#include <functional>
#include <vector>

#include "cvqkd/keyrate.hpp"
#include "cvqkd/types.hpp"

namespace cvqkd {

struct SearchSpec {
    double lo1 = 0.0, hi1 = 1.0;
    double lo2 = 0.0, hi2 = 1.0;
    int coarse = 13;          // grid points per axis
    double step_tol = 1e-4;   // stop when the descent step falls below this
    int max_iters = 400;

    void validate() const {
        if (!(hi1 >= lo1 && hi2 >= lo2)) throw InvalidParams("search bounds inverted");
        if (coarse < 2) throw InvalidParams("coarse resolution must be >= 2");
    }
};

struct ContourPoint {
    double p1 = 0.0, p2 = 0.0, value = 0.0;
};

struct SearchResult {
    double p1 = 0.0, p2 = 0.0;
    double value = 0.0;
    bool positive = false;
    std::vector<ContourPoint> contour;  // coarse-grid evaluations
};

namespace detail {

inline bool lex_smaller(double a1, double a2, double b1, double b2) {
    return a1 < b1 - 1e-15 || (std::abs(a1 - b1) <= 1e-15 && a2 < b2 - 1e-15);
}

inline SearchResult maximize_2d(const std::function<double(double, double)>& f,
                                const SearchSpec& spec) {
    spec.validate();
    SearchResult res;
    const double span1 = spec.hi1 - spec.lo1, span2 = spec.hi2 - spec.lo2;
    const double h1 = span1 / (spec.coarse - 1), h2 = span2 / (spec.coarse - 1);

    res.value = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < spec.coarse; ++i)
        for (int j = 0; j < spec.coarse; ++j) {
            const double x = spec.lo1 + i * h1, y = spec.lo2 + j * h2;
            const double v = f(x, y);
            res.contour.push_back({x, y, v});
            if (v > res.value + 1e-15 ||
                (std::abs(v - res.value) <= 1e-15 && lex_smaller(x, y, res.p1, res.p2))) {
                res.value = v;
                res.p1 = x;
                res.p2 = y;
            }
        }

    double s1 = h1 > 0 ? h1 : 0.0, s2 = h2 > 0 ? h2 : 0.0;
    int iters = 0;
    while ((s1 > spec.step_tol || s2 > spec.step_tol) && iters++ < spec.max_iters) {
        bool moved = false;
        const std::array<std::array<double, 2>, 4> dirs{{{-s1, 0}, {s1, 0}, {0, -s2}, {0, s2}}};
        for (const auto& d : dirs) {
            const double x = std::clamp(res.p1 + d[0], spec.lo1, spec.hi1);
            const double y = std::clamp(res.p2 + d[1], spec.lo2, spec.hi2);
            if (x == res.p1 && y == res.p2) continue;
            const double v = f(x, y);
            if (v > res.value + 1e-15 ||
                (std::abs(v - res.value) <= 1e-15 && lex_smaller(x, y, res.p1, res.p2))) {
                res.value = v;
                res.p1 = x;
                res.p2 = y;
                moved = true;
            }
        }
        if (!moved) {
            s1 *= 0.5;
            s2 *= 0.5;
        }
    }
    res.positive = res.value > 0.0;
    return res;
}

}  // namespace detail

// ---- Alice gains -----------------------------------------------------------------

// argmax over (g_x, g_p) of the post-selected key rate. A negative optimum is
// returned flagged, not thrown: 0 is always in the search space, so the
// optimum is never worse than the unfiltered rate.
inline SearchResult optimize_alice_gains(const ModulationParams& mod, const ChannelParams& ch,
                                         Detection det, const SearchSpec& spec) {
    auto f = [&](double gx, double gp) {
        return keyrate_after_alice(mod, ch, det, gx, gp).key_rate;
    };
    return detail::maximize_2d(f, spec);
}

// ---- GG02 modulation variance -------------------------------------------------------

// Joint search over (vmod_x, vmod_p); through Eve's joint state the two
// quadratures couple, so per-axis optimization is not enough.
inline SearchResult optimize_vmod_gg02(const ChannelParams& ch, Detection det, double beta,
                                       const SearchSpec& spec) {
    auto f = [&](double vx, double vp) {
        ModulationParams m{vx, vp, beta};
        return keyrate_gg02(m, ch, det).key_rate;
    };
    SearchResult r = detail::maximize_2d(f, spec);
    if (!r.positive)
        throw NoPositiveRate("maximal GG02 key rate " + std::to_string(r.value) + " <= 0");
    return r;
}

inline std::pair<std::pair<double, double>, KeyRateReport> keyrate_gg02_optimal(
    const ChannelParams& ch, Detection det, double beta, const SearchSpec& spec) {
    const SearchResult r = optimize_vmod_gg02(ch, det, beta, spec);
    ModulationParams m{r.p1, r.p2, beta};
    return {{r.p1, r.p2}, keyrate_gg02(m, ch, det)};
}

// ---- Bob cut-offs ---------------------------------------------------------------------

namespace detail {

// Reusable per-quadrature Fock objective: the conditional state at the origin
// does not depend on the cut-off, so it is built once (at N and N+10) and
// only the displacement weights change along the search.
class HomodyneCutoffObjective {
public:
    HomodyneCutoffObjective(const ModulationParams& eff, const ChannelParams& ch, Quadrature q,
                            const GridSpec& grid, const FockOptions& opt)
        : eff_(eff), ch_(ch), q_(q), grid_(grid), opt_(opt) {
        cond_ = eve_conditional_cm_homodyne(eff, ch, q);
        fc_ = fock_construction(cond_);
        const DisplacementGrid open = displacement_grid_homodyne(eff, ch, q, 0.0, grid);
        double a1 = 0.0, a2 = 0.0;
        for (const auto& p : open.points) {
            a1 = std::max(a1, std::abs(p.alpha1));
            a2 = std::max(a2, std::abs(p.alpha2));
        }
        n_ = opt.truncation > 0
                 ? opt.truncation
                 : choose_truncation(0.5 * (fc_.lambda1 - 1.0), 0.5 * (fc_.lambda2 - 1.0), a1, a2,
                                     opt.tail_tol, opt.guard, opt.cap);
        rho0_ = conditional_state_at_origin(fc_, n_, 1e-2);
        s_cond_ = von_neumann_entropy(rho0_);
    }

    // beta * I_AB - I_E for this quadrature at cut-off c (success factors applied
    // by the caller)
    double bracket(double c) const {
        const double beta = eff_.beta;
        double iab, ie;
        if (c <= 0.0) {
            iab = gaussian_mutual_info_quad(eff_, ch_, Detection::homodyne, q_);
            ie = holevo_gaussian_homodyne(eff_, ch_, q_);
        } else {
            iab = mi_after_bob_homodyne(eff_, ch_, c, grid_, q_).i_ab;
            const DisplacementGrid dg = displacement_grid_homodyne(eff_, ch_, q_, c, grid_);
            std::vector<WeightedDisplacement> terms;
            for (const auto& p : dg.points) terms.push_back({p.alpha1, p.alpha2, p.weight});
            const FockState avg = weighted_average_state(rho0_, terms, opt_.threads);
            ie = von_neumann_entropy(avg) - s_cond_;
        }
        return beta * iab - ie;
    }

    double p_bob(double c) const {
        return bob_success_prob_homodyne(bob_variance_homodyne(eff_, ch_, q_), c);
    }

private:
    ModulationParams eff_;
    ChannelParams ch_;
    Quadrature q_;
    GridSpec grid_;
    FockOptions opt_;
    Mat4 cond_;
    FockConstruction fc_;
    int n_ = 0;
    FockState rho0_;
    double s_cond_ = 0.0;
};

inline SearchResult maximize_1d(const std::function<double(double)>& f, double lo, double hi,
                                int coarse, double tol) {
    SearchSpec s;
    s.lo1 = lo;
    s.hi1 = hi;
    s.lo2 = s.hi2 = 0.0;
    s.coarse = coarse;
    s.step_tol = tol;
    return maximize_2d([&](double x, double) { return f(x); }, s);
}

}  // namespace detail

struct BobCutoffResult {
    double c_x = 0.0, c_p = 0.0;  // heterodyne result lives in c_x
    double key_rate = 0.0;
    bool positive = false;
    std::vector<ContourPoint> contour;
};

// Search Bob's cut-offs at fixed Alice gains. For homodyne the two quadrature
// terms are independent, so the 2-D objective separates into two 1-D searches
// and the contour table is assembled from their sums.
inline BobCutoffResult optimize_bob_cutoffs(const ModulationParams& mod, const ChannelParams& ch,
                                            Detection det, double g_x, double g_p,
                                            const SearchSpec& spec, const GridSpec& grid,
                                            const FockOptions& opt = {}) {
    spec.validate();
    const ModulationParams eff = effective_modulation(mod, g_x, g_p);
    const double pax = alice_success_prob(mod.vmod_x, g_x);
    const double pap = alice_success_prob(mod.vmod_p, g_p);
    BobCutoffResult res;

    if (det == Detection::homodyne) {
        const detail::HomodyneCutoffObjective ox(eff, ch, Quadrature::x, grid, opt);
        const detail::HomodyneCutoffObjective op(eff, ch, Quadrature::p, grid, opt);
        auto term_x = [&](double c) { return 0.5 * pax * ox.p_bob(c) * ox.bracket(c); };
        auto term_p = [&](double c) { return 0.5 * pap * op.p_bob(c) * op.bracket(c); };
        const SearchResult rx = detail::maximize_1d(term_x, spec.lo1, spec.hi1, spec.coarse,
                                                    spec.step_tol);
        const SearchResult rp = detail::maximize_1d(term_p, spec.lo2, spec.hi2, spec.coarse,
                                                    spec.step_tol);
        res.c_x = rx.p1;
        res.c_p = rp.p1;
        res.key_rate = rx.value + rp.value;
        for (const auto& px : rx.contour)
            for (const auto& pp : rp.contour)
                res.contour.push_back({px.p1, pp.p1, px.value + pp.value});
    } else {
        auto f = [&](double c) {
            FilterSettings fs;
            fs.g_x = g_x;
            fs.g_p = g_p;
            fs.c_rad = c;
            return keyrate_after_bob(mod, ch, det, fs, grid, opt).key_rate;
        };
        const SearchResult r = detail::maximize_1d(f, spec.lo1, spec.hi1, spec.coarse,
                                                    spec.step_tol);
        res.c_x = r.p1;
        res.key_rate = r.value;
        for (const auto& p : r.contour) res.contour.push_back({p.p1, 0.0, p.value});
    }
    res.positive = res.key_rate > 0.0;
    return res;
}

}  // namespace cvqkd
