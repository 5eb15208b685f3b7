#include "helpers.hpp"

#include "cvqkd/symplectic.hpp"

using namespace cvqkd;
using Catch::Approx;

TEST_CASE("Williamson: diagonal thermal input") {
    Mat4 cm = Mat4::Zero();
    cm(0, 0) = cm(1, 1) = 3.0;
    cm(2, 2) = cm(3, 3) = 1.7;
    const SymplecticDecomposition d = williamson(cm);
    CHECK(d.lambda1 == Approx(3.0).margin(1e-10));
    CHECK(d.lambda2 == Approx(1.7).margin(1e-10));
    CHECK((d.s * cm * d.s.transpose() - d.omega_diag()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Williamson: pure TMSV") {
    const double v = 2.9, c = std::sqrt(v * v - 1);
    Mat4 cm;
    cm << v, 0, c, 0, 0, v, 0, -c, c, 0, v, 0, 0, -c, 0, v;
    const SymplecticDecomposition d = williamson(cm);
    CHECK(d.lambda1 == Approx(1.0).margin(1e-9));
    CHECK(d.lambda2 == Approx(1.0).margin(1e-9));
}

TEST_CASE("Williamson: random covariance reconstruction") {
    for (int i = 0; i < 1000; ++i) {
        const Mat4 cm = testers::random_covariance(4.0);
        const SymplecticDecomposition d = williamson(cm);
        const Mat4 om = symplectic_form(2);
        CHECK((d.s * om * d.s.transpose() - om).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((d.s * cm * d.s.transpose() - d.omega_diag()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(d.lambda1 >= d.lambda2);
        CHECK(d.lambda2 >= 1.0 - 1e-9);
    }
}

TEST_CASE("Bloch-Messiah: trivial inputs") {
    SECTION("identity") {
        const BlochMessiah bm = bloch_messiah(Mat4::Identity());
        CHECK(bm.r1 == Approx(0.0).margin(1e-12));
        CHECK(bm.r2 == Approx(0.0).margin(1e-12));
        CHECK((bm.reconstruct() - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("pure rotations carry no squeezing") {
        const Mat4 s = rotation_pair(0.3, -1.1) * beamsplitter(0.42) * rotation_pair(2.0, 0.7);
        const BlochMessiah bm = bloch_messiah(s);
        CHECK(bm.r1 == Approx(0.0).margin(1e-9));
        CHECK(bm.r2 == Approx(0.0).margin(1e-9));
        CHECK((bm.reconstruct() - s).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("Bloch-Messiah: random symplectic reconstruction") {
    for (int i = 0; i < 1000; ++i) {
        const Mat4 s = testers::random_symplectic();
        const BlochMessiah bm = bloch_messiah(s);
        CHECK((bm.reconstruct() - s).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(bm.r1 >= 0.0);
        CHECK(bm.r2 >= 0.0);
        CHECK(bm.u.tau >= 0.0);
        CHECK(bm.u.tau <= 1.0);
        CHECK(bm.v.tau >= 0.0);
        CHECK(bm.v.tau <= 1.0);
    }
}

TEST_CASE("Bloch-Messiah: equal squeezers (degenerate singular values)") {
    for (double r : {0.0, 0.4, 0.9}) {
        const Mat4 s = rotation_pair(0.5, 1.2) * beamsplitter(0.3) * squeeze_pair(r, r) *
                       rotation_pair(-0.8, 0.1);
        const BlochMessiah bm = bloch_messiah(s);
        CHECK((bm.reconstruct() - s).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("symplectic inverse identity") {
    const Mat4 s = testers::random_symplectic();
    CHECK((symplectic_inverse(s) * s - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Fock construction carries the thermal state to the covariance") {
    for (int i = 0; i < 200; ++i) {
        const Mat4 cm = testers::random_covariance(3.5);
        const FockConstruction fc = fock_construction(cm);
        Mat4 d = Mat4::Zero();
        d(0, 0) = d(1, 1) = fc.lambda1;
        d(2, 2) = d(3, 3) = fc.lambda2;
        const Mat4 m = fc.bm.reconstruct();
        CHECK((m * d * m.transpose() - cm).cwiseAbs().maxCoeff() < 1e-8);
    }
}
