#include "helpers.hpp"

#include "cvqkd/optimize.hpp"

using namespace cvqkd;
using Catch::Approx;

TEST_CASE("searches are deterministic and honor ties") {
    SearchSpec spec;
    spec.lo1 = spec.lo2 = 0.0;
    spec.hi1 = spec.hi2 = 2.0;
    spec.coarse = 9;
    auto flat = [](double, double) { return 1.0; };
    const SearchResult a = detail::maximize_2d(flat, spec);
    const SearchResult b = detail::maximize_2d(flat, spec);
    CHECK(a.p1 == b.p1);
    CHECK(a.p2 == b.p2);
    CHECK(a.p1 == 0.0);  // ties break toward the smallest parameters
    CHECK(a.p2 == 0.0);
    CHECK(a.contour.size() == 81);
}

TEST_CASE("quadratic objective is located precisely") {
    SearchSpec spec;
    spec.lo1 = spec.lo2 = 0.0;
    spec.hi1 = spec.hi2 = 3.0;
    spec.coarse = 7;
    spec.step_tol = 1e-7;
    auto f = [](double x, double y) {
        return -(x - 1.37) * (x - 1.37) - 2.0 * (y - 0.55) * (y - 0.55);
    };
    const SearchResult r = detail::maximize_2d(f, spec);
    CHECK(r.p1 == Approx(1.37).margin(1e-5));
    CHECK(r.p2 == Approx(0.55).margin(1e-5));
}

TEST_CASE("GG02 modulation optimum") {
    const auto& reg = testers::kRegimes[2];  // 29.1 km
    const ChannelParams ch = testers::regime_channel(reg);
    SearchSpec spec;
    spec.lo1 = spec.lo2 = 0.3;
    spec.hi1 = spec.hi2 = 20.0;
    spec.coarse = 13;
    spec.step_tol = 1e-4;
    const SearchResult r = optimize_vmod_gg02(ch, Detection::homodyne, 0.92, spec);

    // cross-checked against an independent derivative-free optimization of
    // the same objective (Nelder-Mead, double precision)
    CHECK(r.p1 == Approx(5.1622).margin(2e-3));
    CHECK(r.p2 == Approx(4.9790).margin(2e-3));
    CHECK(r.value == Approx(0.0070329).margin(2e-6));

    // local maximality
    ModulationParams probe{r.p1 + 0.05, r.p2, 0.92};
    CHECK(keyrate_gg02(probe, ch, Detection::homodyne).key_rate <= r.value);
    probe = ModulationParams{r.p1, r.p2 - 0.05, 0.92};
    CHECK(keyrate_gg02(probe, ch, Detection::homodyne).key_rate <= r.value);

    SECTION("no positive rate throws") {
        ChannelParams dead = ch;
        dead.t = 0.01;
        dead.w_x = dead.w_p = 1.3;
        CHECK_THROWS_AS(optimize_vmod_gg02(dead, Detection::homodyne, 0.92, spec),
                        NoPositiveRate);
    }
}

TEST_CASE("Alice gain optimization") {
    SearchSpec spec;
    spec.lo1 = spec.lo2 = 0.0;
    spec.hi1 = spec.hi2 = 0.436;
    spec.coarse = 12;
    spec.step_tol = 1e-4;

    SECTION("suboptimal regime benefits from filtering") {
        const auto& reg = testers::kRegimes[2];
        const ModulationParams mod = testers::regime_modulation(reg);
        const ChannelParams ch = testers::regime_channel(reg);
        const SearchResult r = optimize_alice_gains(mod, ch, Detection::homodyne, spec);
        CHECK(r.positive);
        CHECK(r.p1 > 0.1);
        CHECK(r.p2 > 0.1);
        const double at_paper =
            keyrate_after_alice(mod, ch, Detection::homodyne, 0.213, 0.259).key_rate;
        const double at_zero = keyrate_gg02(mod, ch, Detection::homodyne).key_rate;
        CHECK(r.value >= at_paper - 1e-12);
        CHECK(r.value >= at_zero);
    }

    SECTION("already-optimal regime keeps zero gain") {
        const auto& reg = testers::kRegimes[0];  // 6 km
        const ModulationParams mod = testers::regime_modulation(reg);
        const ChannelParams ch = testers::regime_channel(reg);
        const SearchResult r = optimize_alice_gains(mod, ch, Detection::homodyne, spec);
        CHECK(r.p1 == Approx(0.0).margin(1e-3));
        CHECK(r.p2 == Approx(0.0).margin(1e-3));
        CHECK(r.value == Approx(keyrate_gg02(mod, ch, Detection::homodyne).key_rate)
                             .margin(1e-9));
    }

    SECTION("nested bounds never lose value") {
        const auto& reg = testers::kRegimes[2];
        const ModulationParams mod = testers::regime_modulation(reg);
        const ChannelParams ch = testers::regime_channel(reg);
        SearchSpec narrow = spec;
        narrow.hi1 = narrow.hi2 = 0.2;
        const double v_narrow =
            optimize_alice_gains(mod, ch, Detection::homodyne, narrow).value;
        const double v_wide = optimize_alice_gains(mod, ch, Detection::homodyne, spec).value;
        CHECK(v_wide >= v_narrow - 1e-12);
    }
}

TEST_CASE("Bob cut-off optimization on a compact scenario") {
    ChannelParams ch;
    ch.t = 0.6;
    ch.w_x = 1.03;
    ch.w_p = 1.02;
    ch.xi_x = 0.05;
    ch.xi_p = 0.08;
    ModulationParams mod{1.5, 1.8, 0.92};
    GridSpec grid{0.25, 7.0, 7.0};
    FockOptions opt;
    opt.threads = 2;

    SearchSpec spec;
    spec.lo1 = spec.lo2 = 0.0;
    spec.hi1 = spec.hi2 = 3.0;
    spec.coarse = 7;
    spec.step_tol = 0.02;

    const BobCutoffResult r =
        optimize_bob_cutoffs(mod, ch, Detection::homodyne, 0.0, 0.0, spec, grid, opt);
    CHECK(r.contour.size() == 49);
    // zero cut-off is in the search space, so the optimum cannot be worse
    FilterSettings none;
    const double base = keyrate_after_bob(mod, ch, Detection::homodyne, none, grid, opt).key_rate;
    CHECK(r.key_rate >= base - 1e-9);

    // the reported optimum reproduces through the plain pipeline
    FilterSettings fs;
    fs.c_x = r.c_x;
    fs.c_p = r.c_p;
    const double replay = keyrate_after_bob(mod, ch, Detection::homodyne, fs, grid, opt).key_rate;
    CHECK(replay == Approx(r.key_rate).margin(5e-4));
}
