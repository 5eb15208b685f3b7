#include "helpers.hpp"

#include "cvqkd/gaussian.hpp"

using namespace cvqkd;
using Catch::Approx;

TEST_CASE("bob variance, homodyne") {
    ChannelParams ch;
    ch.t = 0.26;
    ch.w_p = 1.01;
    ch.xi_p = 0.40;
    ModulationParams mod{0.0, 5.97, 0.92};
    // direct evaluation: 0.26*(6.97+0.40) + 0.74*1.01 = 2.6636
    CHECK(bob_variance_homodyne(mod, ch, Quadrature::p) ==
          Approx(0.26 * 7.37 + 0.74 * 1.01).margin(1e-12));
    CHECK(bob_variance_homodyne(mod, ch, Quadrature::p) == Approx(2.663).margin(1e-3));

    ChannelParams id;  // identity channel on vacuum
    CHECK(bob_variance_homodyne(ModulationParams{0, 0, 0.9}, id, Quadrature::x) == Approx(1.0));

    ChannelParams rep;  // full replacement by Eve's mode
    rep.t = 0.0;
    rep.w_x = 1.02;
    CHECK(bob_variance_homodyne(ModulationParams{0, 0, 0.9}, rep, Quadrature::x) == Approx(1.02));
}

TEST_CASE("bob variance, heterodyne") {
    ChannelParams vac;
    CHECK(bob_variance_heterodyne_measured(ModulationParams{0, 0, 0.9}, vac, Quadrature::x) ==
          Approx(1.0));

    // lossless limit: state variance equals vmod + 1 + xi
    ChannelParams lossless;
    lossless.xi_x = 0.2;
    ModulationParams mod{3.5, 3.5, 0.9};
    CHECK(bob_variance_heterodyne_state(mod, lossless, Quadrature::x) ==
          Approx(3.5 + 1.0 + 0.2).margin(1e-12));

    // Data61 golden value, frozen from an independent transcription of the
    // measured-variance formula
    const ChannelParams ch = testers::data61_channel();
    const ModulationParams d61 = testers::data61_modulation();
    const double expect =
        0.5 * (ch.eta * ch.t * (4.06 + 1.0 + 0.0867) + ch.eta * (1.0 - ch.t) * 1.0437 +
               (1.0 - ch.eta) + 1.0) +
        0.4401;
    CHECK(bob_variance_heterodyne_measured(d61, ch, Quadrature::x) ==
          Approx(expect).margin(1e-14));
    CHECK(bob_variance_heterodyne_measured(d61, ch, Quadrature::x) ==
          Approx(1.5128253455341885).margin(1e-12));
}

TEST_CASE("EB covariance matrix") {
    SECTION("no modulation leaves no correlations") {
        ChannelParams ch;
        ch.t = 0.5;
        ch.w_x = ch.w_p = 1.1;
        const Mat4 cm = eb_covariance(ModulationParams{0, 0, 0.9}, ch, Detection::homodyne);
        CHECK(cm(0, 0) == Approx(1.0));
        CHECK(cm(1, 1) == Approx(1.0));
        CHECK(cm(0, 2) == Approx(0.0).margin(1e-15));
        CHECK(cm(1, 3) == Approx(0.0).margin(1e-15));
        CHECK(cm(2, 2) == Approx(0.5 * 1.0 + 0.5 * 1.1));
    }

    SECTION("Fig. 2 regime fixture") {
        const auto& reg = testers::kRegimes[2];
        const Mat4 cm = eb_covariance(testers::regime_modulation(reg), testers::regime_channel(reg),
                                      Detection::homodyne);
        // direct evaluation of the five independent entries
        const double vx = 13.74, vp = 14.52;
        CHECK(cm(0, 0) == Approx(vx));
        CHECK(cm(1, 1) == Approx(vp));
        CHECK(cm(0, 2) == Approx(std::sqrt(0.261 * (vx * vx - 1))));
        CHECK(cm(1, 3) == Approx(-std::sqrt(0.261 * (vp * vp - 1))));
        CHECK(cm(2, 2) == Approx(0.261 * (vx + 0.28) + 0.739 * 1.02));
        CHECK(cm(3, 3) == Approx(0.261 * (vp + 0.40) + 0.739 * 1.01));
        CHECK(cm == cm.transpose());
    }

    SECTION("bona fide for symmetric modulation") {
        // With strongly asymmetric modulation the per-quadrature EB
        // correlations describe classical statistics only, not a joint
        // quantum state; the physicality invariant applies to the symmetric
        // case and to the mildly asymmetric experimental regimes below.
        for (int i = 0; i < 200; ++i) {
            const ChannelParams ch = testers::random_channel();
            const double v = testers::uniform(0, 15);
            ModulationParams mod{v, v, 0.9};
            const Detection det = i % 2 ? Detection::homodyne : Detection::heterodyne;
            CHECK(bona_fide_margin(eb_covariance(mod, ch, det)) > -1e-9);
        }
    }

    SECTION("bona fide on the experimental regimes") {
        for (const auto& reg : testers::kRegimes) {
            const Mat4 cm = eb_covariance(testers::regime_modulation(reg),
                                          testers::regime_channel(reg), Detection::homodyne);
            CHECK(bona_fide_margin(cm) > -1e-9);
        }
        CHECK(bona_fide_margin(eb_covariance(testers::data61_modulation(),
                                             testers::data61_channel(),
                                             Detection::heterodyne)) > -1e-9);
    }
}

TEST_CASE("Eve's average covariance matrix") {
    SECTION("pure loss leaves Eve with vacuum in the kept arm") {
        ChannelParams ch;
        ch.t = 0.4;
        const Mat4 cm = eve_average_cm(ModulationParams{6, 6, 0.9}, ch);
        CHECK(cm(0, 2) == Approx(0.0).margin(1e-12));
        CHECK(cm(2, 2) == Approx(1.0));
        CHECK(cm(3, 3) == Approx(1.0));
        CHECK(cm(0, 0) == Approx(0.4 * 1.0 + 0.6 * 7.0));
    }

    SECTION("spec arithmetic for the after-Alice x entry") {
        ChannelParams ch;
        ch.t = 0.26;
        ch.w_x = 1.02;
        ch.w_p = 1.01;
        ch.xi_x = 0.28;
        const Mat4 cm = eve_average_cm(ModulationParams{5.91, 4.8, 0.9}, ch);
        CHECK(cm(0, 0) == Approx(0.26 * 1.02 + 0.74 * (6.91 + 0.28)).margin(1e-12));
    }

    SECTION("symmetric noise reduces to a single TMSV resource") {
        const EveSqueezing s = eve_squeezing(1.15, 1.15);
        CHECK(s.r2 == Approx(-s.r1).margin(1e-14));
        const double c = std::sqrt(1.15 * 1.15 - 1.0);
        CHECK(s.c_ex == Approx(-c).margin(1e-12));
        CHECK(s.c_ep == Approx(c).margin(1e-12));
    }

    SECTION("the purifying resource is a pure two-mode state") {
        for (double wp : {1.0, 1.01, 1.2}) {
            const EveSqueezing s = eve_squeezing(1.05, wp);
            Mat4 res;
            res << 1.05, 0, s.c_ex, 0,
                   0, wp, 0, s.c_ep,
                   s.c_ex, 0, 1.05, 0,
                   0, s.c_ep, 0, wp;
            const auto lam = symplectic_eigenvalues(res);
            CHECK(lam[0] == Approx(1.0).margin(1e-9));
            CHECK(lam[1] == Approx(1.0).margin(1e-9));
        }
    }

    SECTION("average and conditional states stay bona fide") {
        for (int i = 0; i < 200; ++i) {
            const ChannelParams ch = testers::random_channel();
            ModulationParams mod{testers::uniform(0, 15), testers::uniform(0, 15), 0.9};
            CHECK(bona_fide_margin(eve_average_cm(mod, ch)) > -1e-9);
            CHECK(bona_fide_margin(eve_conditional_cm_homodyne(mod, ch, Quadrature::x)) > -1e-7);
            CHECK(bona_fide_margin(eve_conditional_cm_homodyne(mod, ch, Quadrature::p)) > -1e-7);
        }
    }
}

TEST_CASE("Eve's conditional covariance matrix") {
    SECTION("lossless channel decouples Eve") {
        ChannelParams ch;  // T = 1
        ch.w_x = ch.w_p = 1.2;
        ModulationParams mod{5, 5, 0.9};
        const Mat4 avg = eve_average_cm(mod, ch);
        const Mat4 cond = eve_conditional_cm_homodyne(mod, ch, Quadrature::x);
        CHECK((avg - cond).cwiseAbs().maxCoeff() < 1e-12);
    }

    SECTION("conditioning never increases the entropy") {
        for (int i = 0; i < 100; ++i) {
            const ChannelParams ch = testers::random_channel();
            ModulationParams mod{testers::uniform(0.5, 12), testers::uniform(0.5, 12), 0.9};
            const double s_avg = gaussian_entropy(eve_average_cm(mod, ch));
            CHECK(gaussian_entropy(eve_conditional_cm_homodyne(mod, ch, Quadrature::x)) <=
                  s_avg + 1e-9);
            CHECK(gaussian_entropy(eve_conditional_cm_heterodyne(mod, ch)) <= s_avg + 1e-9);
        }
    }
}

TEST_CASE("symplectic eigenvalues") {
    CHECK(symplectic_eigenvalues(Mat4::Identity()) == std::vector<double>{1.0, 1.0});

    // pure TMSV
    const double v = 3.7, c = std::sqrt(v * v - 1);
    Mat4 tmsv;
    tmsv << v, 0, c, 0, 0, v, 0, -c, c, 0, v, 0, 0, -c, 0, v;
    const auto lam = symplectic_eigenvalues(tmsv);
    CHECK(lam[0] == Approx(1.0).margin(1e-9));
    CHECK(lam[1] == Approx(1.0).margin(1e-9));

    // single thermal mode
    Eigen::MatrixXd th = Eigen::MatrixXd::Identity(2, 2) * 2.4;
    CHECK(symplectic_eigenvalues(th)[0] == Approx(2.4));

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2) * 0.5;
    CHECK_THROWS_AS(symplectic_eigenvalues(bad), NonPhysicalState);
}

TEST_CASE("Gaussian entropy") {
    CHECK(gaussian_entropy(Mat4::Identity()) == Approx(0.0).margin(1e-12));
    // thermal nbar = 1: g(3) = 2 bits
    CHECK(gaussian_g(3.0) == Approx(2.0).margin(1e-12));
    Eigen::MatrixXd th = Eigen::MatrixXd::Identity(2, 2) * 3.0;
    CHECK(gaussian_entropy(th) == Approx(2.0).margin(1e-12));

    // additivity over a block-diagonal direct sum
    Mat4 sum = Mat4::Zero();
    sum.block<2, 2>(0, 0) = Eigen::Matrix2d::Identity() * 3.0;
    sum.block<2, 2>(2, 2) = Eigen::Matrix2d::Identity() * 1.8;
    CHECK(gaussian_entropy(sum) == Approx(gaussian_g(3.0) + gaussian_g(1.8)).margin(1e-10));
}

TEST_CASE("Holevo bound, Gaussian path") {
    SECTION("zero at unit transmittance") {
        ChannelParams ch;
        ch.w_x = ch.w_p = 1.3;
        ModulationParams mod{8, 8, 0.9};
        CHECK(holevo_gaussian_homodyne(mod, ch, Quadrature::x) == Approx(0.0).margin(1e-9));
        CHECK(holevo_gaussian_heterodyne(mod, ch) == Approx(0.0).margin(1e-9));
    }

    SECTION("non-negative everywhere") {
        for (int i = 0; i < 100; ++i) {
            const ChannelParams ch = testers::random_channel();
            ModulationParams mod{testers::uniform(0.5, 12), testers::uniform(0.5, 12), 0.9};
            CHECK(holevo_gaussian_homodyne(mod, ch, Quadrature::x) > -1e-9);
            CHECK(holevo_gaussian_homodyne(mod, ch, Quadrature::p) > -1e-9);
            CHECK(holevo_gaussian_heterodyne(mod, ch) > -1e-9);
        }
    }

    SECTION("monotone in the thermal noise") {
        ModulationParams mod{10, 10, 0.92};
        double prev = -1.0;
        for (double w = 1.0; w <= 1.25; w += 0.05) {
            ChannelParams ch;
            ch.t = 0.3;
            ch.w_x = ch.w_p = w;
            const double ie = holevo_gaussian_homodyne(mod, ch, Quadrature::x);
            CHECK(ie >= prev - 1e-12);
            prev = ie;
        }
    }
}

TEST_CASE("analytic mutual information") {
    SECTION("uncorrelated gives zero") {
        ChannelParams ch;
        ch.t = 0.5;
        CHECK(gaussian_mutual_info_quad(ModulationParams{0, 0, 0.9}, ch, Detection::homodyne,
                                        Quadrature::x) == Approx(0.0).margin(1e-12));
    }

    SECTION("matches the prepare-and-measure SNR form") {
        // independent route: I = 0.5 log2(1 + T vmod / (T(1+xi) + (1-T)W))
        for (int i = 0; i < 50; ++i) {
            const ChannelParams ch = testers::random_channel();
            ModulationParams mod{testers::uniform(0.5, 14), testers::uniform(0.5, 14), 0.9};
            const double snr = ch.t * mod.vmod_x /
                               (ch.t * (1 + ch.xi_x) + (1 - ch.t) * ch.w_x);
            CHECK(gaussian_mutual_info_quad(mod, ch, Detection::homodyne, Quadrature::x) ==
                  Approx(0.5 * std::log2(1.0 + snr)).margin(1e-10));
        }
    }

    SECTION("heterodyne averages the two quadratures") {
        const ChannelParams ch = testers::data61_channel();
        const ModulationParams mod = testers::data61_modulation();
        const double ix = gaussian_mutual_info_quad(mod, ch, Detection::heterodyne, Quadrature::x);
        const double ip = gaussian_mutual_info_quad(mod, ch, Detection::heterodyne, Quadrature::p);
        CHECK(gaussian_mutual_info(mod, ch, Detection::heterodyne) ==
              Approx(0.5 * (ix + ip)).margin(1e-14));
    }
}
