#include <doctest.h>

#include <random>

#include "spinkubo/lattice_model.hpp"

using namespace spinkubo;

TEST_SUITE("lattice_model") {

TEST_CASE("zero couplings give the zero operator") {
    HoppingKernel k = build_kane_mele({0, 0, 0, 0});
    CHECK(k.empty());
    CHECK(k.range() == 0);
}

TEST_CASE("nearest-neighbor term lands on the dimerization offsets") {
    HoppingKernel k = build_kane_mele({1, 0, 0, 0});
    const InternalBasis b = k.basis();
    // A -> B entries exactly at (0,0), (1,1), (0,1): images of d1, d2, d3
    // under a1 = d2 - d3, a2 = d3 - d1.
    const std::vector<Cell> expected{{0, 0}, {1, 1}, {0, 1}};
    for (Cell d : expected) {
        const Mat m = k.block(d);
        CHECK(std::abs(m(b.index(0, 0), b.index(1, 0)) - Complex(1, 0)) < 1e-15);
        CHECK(std::abs(m(b.index(0, 1), b.index(1, 1)) - Complex(1, 0)) < 1e-15);
    }
    for (const auto& [d, m] : k.hoppings()) {
        const double ab = std::abs(m(b.index(0, 0), b.index(1, 0)));
        if (ab > 0) {
            const bool listed =
                std::find(expected.begin(), expected.end(), d) != expected.end();
            CHECK(listed);
        }
    }
    // Three bonds per site: each scalar row of the kernel has 3 entries.
    int row_a = 0, row_b = 0;
    for (const auto& [d, m] : k.hoppings())
        for (int c = 0; c < 4; ++c) {
            if (std::abs(m(b.index(0, 0), c)) > 0) ++row_a;
            if (std::abs(m(b.index(1, 0), c)) > 0) ++row_b;
        }
    CHECK(row_a == 3);
    CHECK(row_b == 3);
}

TEST_CASE("spin-orbit term support and structure") {
    HoppingKernel k = build_kane_mele({0, 0, 1, 0});
    const std::vector<Cell> expected{{1, 0},  {-1, 0}, {0, 1},
                                     {0, -1}, {1, 1},  {-1, -1}};
    CHECK(k.hoppings().size() == expected.size());
    for (Cell d : expected) {
        const Mat m = k.block(d);
        CHECK(m.norm() > 0);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                if (r != c) {
                    CHECK(std::abs(m(r, c)) == 0.0);  // sublattice and spin diagonal
                } else {
                    CHECK(std::abs(m(r, c).real()) < 1e-15);  // purely imaginary
                }
            }
        // Opposite signs on A and B, s_z structure in spin.
        CHECK(std::abs(m(0, 0) + m(1, 1)) < 1e-15);
        CHECK(std::abs(m(0, 0) + m(2, 2)) < 1e-15);
        CHECK(std::abs(m(2, 2) + m(3, 3)) < 1e-15);
    }
}

TEST_CASE("kernel hermiticity holds for arbitrary parameters") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        KaneMeleParams p{dist(rng), dist(rng), dist(rng), dist(rng)};
        HoppingKernel k = build_kane_mele(p);
        CHECK(k.hermiticity_residual() < 1e-14);
        CHECK(k.range() <= 2);
    }
}

TEST_CASE("bloch fiber of the zero kernel") {
    HoppingKernel k = build_kane_mele({0, 0, 0, 0});
    CHECK(bloch_fiber(k, 1.3, -0.4).norm() == 0.0);
}

TEST_CASE("nearest-neighbor fiber at k = 0 has eigenvalues -3,-3,3,3") {
    HoppingKernel k = build_kane_mele({1, 0, 0, 0});
    Eigen::SelfAdjointEigenSolver<Mat> s(bloch_fiber(k, 0, 0));
    CHECK(s.eigenvalues()(0) == doctest::Approx(-3).epsilon(1e-12));
    CHECK(s.eigenvalues()(1) == doctest::Approx(-3).epsilon(1e-12));
    CHECK(s.eigenvalues()(2) == doctest::Approx(3).epsilon(1e-12));
    CHECK(s.eigenvalues()(3) == doctest::Approx(3).epsilon(1e-12));
}

TEST_CASE("on-site term is k-independent diag(+1,+1,-1,-1)") {
    HoppingKernel k = build_kane_mele({0, 1, 0, 0});
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 2 * kPi);
    for (int t = 0; t < 5; ++t) {
        Mat h = bloch_fiber(k, dist(rng), dist(rng));
        Mat expect = Mat::Zero(4, 4);
        expect.diagonal() << 1, 1, -1, -1;
        CHECK((h - expect).norm() < 1e-14);
    }
}

TEST_CASE("fibers are hermitian at random momenta") {
    HoppingKernel k = build_kane_mele({1.0, 0.3, 0.1, 0.2});
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(0.0, 2 * kPi);
    for (int t = 0; t < 100; ++t) {
        Mat h = bloch_fiber(k, dist(rng), dist(rng));
        CHECK((h - Mat(h.adjoint())).norm() < 1e-13);
    }
}

TEST_CASE("spectrum symmetric about zero without staggering and Rashba") {
    HoppingKernel k = build_kane_mele({1.0, 0.0, 0.13, 0.0});
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(0.0, 2 * kPi);
    for (int t = 0; t < 20; ++t) {
        Eigen::SelfAdjointEigenSolver<Mat> s(bloch_fiber(k, dist(rng), dist(rng)));
        const auto& ev = s.eigenvalues();
        CHECK(std::abs(ev(0) + ev(3)) < 1e-12);
        CHECK(std::abs(ev(1) + ev(2)) < 1e-12);
    }
}

TEST_CASE("time reversal: Kane-Mele symmetric, an s_z on-site term breaks it by 2 eps") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (int t = 0; t < 10; ++t) {
        KaneMeleParams p{dist(rng), dist(rng), dist(rng), dist(rng)};
        CHECK(verify_time_reversal(build_kane_mele(p)) < 1e-14);
    }

    HoppingKernel k = build_kane_mele({1.0, 0.1, 0.06, 0.05});
    Mat sz_full = Mat::Zero(4, 4);
    sz_full.diagonal() << 1, -1, 1, -1;  // s_z on both sublattices
    k.add({0, 0}, 0.1 * sz_full);
    CHECK(verify_time_reversal(k) == doctest::Approx(0.2).epsilon(1e-12));

    CHECK(verify_time_reversal(build_kane_mele({0, 0, 0, 0})) == 0.0);
}

TEST_CASE("switch function summation identity") {
    const std::vector<SwitchFunction> switches = {
        SwitchFunction::sharp(1), SwitchFunction::linear_ramp(2),
        SwitchFunction::xi_ramp(1, 7), SwitchFunction::xi_ramp(1, 14),
        SwitchFunction::sharp(2).shifted(3)};
    for (const auto& sw : switches) {
        for (int n = -20; n <= 20; ++n) {
            // The summand vanishes outside the jump window widened by |n|.
            double sum = 0.0;
            for (int m = sw.jump_lo() - std::abs(n) - 2;
                 m <= sw.jump_hi() + std::abs(n) + 2; ++m)
                sum += sw(m + n) - sw(m);
            CHECK(std::abs(sum - n) < 1e-12);
        }
    }
}

TEST_CASE("approximate position clamps, is odd, equals l (Xi - 1/2)") {
    for (int l : {7, 14}) {
        const SwitchFunction xi = SwitchFunction::xi_ramp(1, l);
        for (int n = -2 * l; n <= 2 * l; ++n) {
            CHECK(approximate_position(l, n) == -approximate_position(l, -n));
            CHECK(approximate_position(l, n) <= l / 2.0);
            CHECK(approximate_position(l, n) >= -l / 2.0);
            if (std::abs(n) < l / 2.0) CHECK(approximate_position(l, n) == n);
            CHECK(std::abs(l * (xi(n) - 0.5) - approximate_position(l, n)) < 1e-12);
        }
    }
}

}  // TEST_SUITE
