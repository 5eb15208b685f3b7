#include "helpers.hpp"

#include "cvqkd/keyrate.hpp"

using namespace cvqkd;
using Catch::Approx;

namespace {

// small, fast Fock scenario: modest occupation and displacements
ChannelParams small_channel() {
    ChannelParams ch;
    ch.t = 0.6;
    ch.w_x = 1.03;
    ch.w_p = 1.02;
    ch.xi_x = 0.05;
    ch.xi_p = 0.08;
    return ch;
}

ModulationParams small_modulation() { return ModulationParams{1.5, 1.8, 0.92}; }

GridSpec small_grid(const ModulationParams& mod, const ChannelParams& ch, Detection det) {
    GridSpec g = GridSpec::scaled(det,
                                  std::max(classical_moments(mod, ch, det, Quadrature::x).sigma_a,
                                           classical_moments(mod, ch, det, Quadrature::p).sigma_a),
                                  std::max(classical_moments(mod, ch, det, Quadrature::x).sigma_b,
                                           classical_moments(mod, ch, det, Quadrature::p).sigma_b));
    g.delta = det == Detection::homodyne ? 0.2 : 0.5;
    g.a_bound = std::ceil(g.a_bound);
    g.b_bound = std::ceil(g.b_bound);
    return g;
}

}  // namespace

TEST_CASE("GG02 baseline equals zero-gain post-selection") {
    for (const auto& reg : testers::kRegimes) {
        const ModulationParams mod = testers::regime_modulation(reg);
        const ChannelParams ch = testers::regime_channel(reg);
        const KeyRateReport a = keyrate_gg02(mod, ch, Detection::homodyne);
        const KeyRateReport b = keyrate_after_alice(mod, ch, Detection::homodyne, 0.0, 0.0);
        CHECK(a.key_rate == b.key_rate);
        CHECK(a.p_alice_x == 1.0);
        CHECK(a.i_ab == Approx(0.5 * (a.i_ab_x + a.i_ab_p)));
    }
}

TEST_CASE("lossless noiseless channel leaks nothing") {
    ChannelParams ch;  // T = 1, W = 1
    ModulationParams mod{6.0, 6.0, 0.92};
    const KeyRateReport r = keyrate_gg02(mod, ch, Detection::homodyne);
    CHECK(r.i_e == Approx(0.0).margin(1e-9));
    CHECK(r.key_rate == Approx(0.92 * r.i_ab).margin(1e-9));
    CHECK(r.key_rate > 0.0);
}

TEST_CASE("averaging rules recompose the key rate") {
    const auto& reg = testers::kRegimes[2];
    const ModulationParams mod = testers::regime_modulation(reg);
    const ChannelParams ch = testers::regime_channel(reg);
    const KeyRateReport r = keyrate_after_alice(mod, ch, Detection::homodyne, 0.213, 0.259);
    const double iab = 0.5 * r.p_alice_x * r.i_ab_x + 0.5 * r.p_alice_p * r.i_ab_p;
    const double ie = 0.5 * r.p_alice_x * r.i_e_x + 0.5 * r.p_alice_p * r.i_e_p;
    CHECK(r.i_ab == Approx(iab).margin(1e-14));
    CHECK(r.key_rate == Approx(0.92 * iab - ie).margin(1e-14));
    CHECK(r.vmod_eff_x == Approx(5.909).margin(5e-4));

    const KeyRateReport h = keyrate_after_alice(testers::data61_modulation(),
                                                testers::data61_channel(),
                                                Detection::heterodyne, 0.1, 0.1);
    CHECK(h.key_rate ==
          Approx(h.p_alice_x * h.p_alice_p * (0.925 * h.i_ab - h.i_e)).margin(1e-14));
}

TEST_CASE("detector absorption for homodyne scenarios") {
    ChannelParams ch;
    ch.t = 0.4;
    ch.w_x = ch.w_p = 1.0;
    ch.eta = 0.8;
    const ChannelParams eff = absorb_detector(ch);
    CHECK(eff.t == Approx(0.32));
    CHECK(eff.w_x == Approx(1.0));  // pure loss stays pure loss
    CHECK(eff.eta == 1.0);

    ch.xi_d_x = ch.xi_d_p = 0.05;
    const ChannelParams eff2 = absorb_detector(ch);
    // V_b is preserved by the reduction
    ModulationParams mod{5.0, 5.0, 0.9};
    const double vb_direct = ch.eta * (ch.t * (5.0 + 1.0) + (1.0 - ch.t) * 1.0) +
                             (1.0 - ch.eta) + 0.05;
    CHECK(bob_variance_homodyne(mod, eff2, Quadrature::x) == Approx(vb_direct).margin(1e-12));
}

TEST_CASE("Fock bound against the Gaussian oracle at zero cut-off") {
    const ChannelParams ch = small_channel();
    const ModulationParams mod = small_modulation();
    const GridSpec grid = small_grid(mod, ch, Detection::homodyne);
    FockOptions opt;
    opt.threads = 2;

    for (Quadrature q : {Quadrature::x, Quadrature::p}) {
        const double oracle = holevo_gaussian_homodyne(mod, ch, q);
        const FockEveResult fe = eve_info_fock_homodyne(mod, ch, q, 0.0, grid, opt);
        CHECK(fe.i_e == Approx(oracle).margin(0.01));
        CHECK(fe.diag.converged);
        CHECK(fe.i_e <= fe.i_e_extremality + 1e-6);
        CHECK(std::abs(fe.diag.weight_deficit) < 1e-4);
    }
}

TEST_CASE("Fock bound, heterodyne, at zero cut-off") {
    const ChannelParams ch = small_channel();
    const ModulationParams mod = small_modulation();
    const GridSpec grid = small_grid(mod, ch, Detection::heterodyne);
    FockOptions opt;
    opt.threads = 2;
    const double oracle = holevo_gaussian_heterodyne(mod, ch);
    const FockEveResult fe = eve_info_fock_heterodyne(mod, ch, 0.0, grid, opt);
    CHECK(fe.i_e == Approx(oracle).margin(0.01));
}

TEST_CASE("decoupled Eve gets nothing from any filter") {
    ChannelParams ch;  // T = 1
    ch.w_x = ch.w_p = 1.1;
    ModulationParams mod{1.0, 1.0, 0.92};
    GridSpec grid{0.25, 6.0, 6.0};
    const FockEveResult fe = eve_info_fock_homodyne(mod, ch, Quadrature::x, 1.0, grid);
    CHECK(fe.i_e == Approx(0.0).margin(2e-3));
}

TEST_CASE("filtered ensemble stays below the extremality bound") {
    const ChannelParams ch = small_channel();
    const ModulationParams mod = small_modulation();
    const GridSpec grid = small_grid(mod, ch, Detection::homodyne);
    const double c = 1.1;
    const FockEveResult fe = eve_info_fock_homodyne(mod, ch, Quadrature::x, c, grid);
    CHECK(fe.i_e < fe.i_e_extremality);
    CHECK(fe.i_e > 0.0);
}

TEST_CASE("full pipeline with both filters") {
    const ChannelParams ch = small_channel();
    const ModulationParams mod = small_modulation();
    const GridSpec grid = small_grid(mod, ch, Detection::homodyne);
    FockOptions opt;
    opt.threads = 2;

    FilterSettings none;
    const KeyRateReport base = keyrate_after_bob(mod, ch, Detection::homodyne, none, grid, opt);
    const KeyRateReport alice = keyrate_after_alice(mod, ch, Detection::homodyne, 0.0, 0.0);
    CHECK(base.key_rate == Approx(alice.key_rate).margin(1e-12));
    CHECK(base.method == "gaussian");

    FilterSettings fs;
    fs.c_x = 0.4;
    const KeyRateReport cut = keyrate_after_bob(mod, ch, Detection::homodyne, fs, grid, opt);
    CHECK(cut.method == "fock");
    CHECK(cut.p_bob_x < 1.0);
    CHECK(cut.p_bob_p == 1.0);
    REQUIRE(cut.fock_x.has_value());
    CHECK(cut.fock_x->converged);
    // success factors never exceed one and only shrink with more filtering
    CHECK(cut.p_bob_x <= 1.0);
    CHECK(cut.i_ab <= base.i_ab + 1e-12);

    // small cut-off stays near the unfiltered rate
    FilterSettings tiny;
    tiny.c_x = 0.05;
    const KeyRateReport near = keyrate_after_bob(mod, ch, Detection::homodyne, tiny, grid, opt);
    CHECK(near.key_rate == Approx(base.key_rate).margin(0.01));
}

TEST_CASE("heterodyne pipeline with a radial cut-off") {
    const ChannelParams ch = small_channel();
    const ModulationParams mod = small_modulation();
    GridSpec grid = small_grid(mod, ch, Detection::heterodyne);
    FockOptions opt;
    opt.threads = 2;

    FilterSettings fs;
    fs.c_rad = 0.8;
    const KeyRateReport r = keyrate_after_bob(mod, ch, Detection::heterodyne, fs, grid, opt);
    CHECK(r.method == "fock");
    CHECK(r.p_bob_rad < 1.0);
    CHECK(r.key_rate == Approx(r.p_bob_rad * r.p_alice_x * r.p_alice_p *
                               (0.92 * r.i_ab - r.i_e))
                            .margin(1e-12));
}
