#include <doctest.h>

#include <cmath>

#include "spinkubo/errors.hpp"
#include "spinkubo/spectral.hpp"
#include "test_helpers.hpp"

using namespace spinkubo;
using namespace spinkubo::testing;

TEST_SUITE("spectral") {

TEST_CASE("flat bands of the on-site term") {
    HoppingKernel h = build_kane_mele({0, 1, 0, 0});
    BZGrid grid(6);
    BandTable bands = band_spectrum(h, grid);
    for (int k = 0; k < grid.points(); ++k) {
        CHECK(bands.energy(k, 0) == doctest::Approx(-1));
        CHECK(bands.energy(k, 1) == doctest::Approx(-1));
        CHECK(bands.energy(k, 2) == doctest::Approx(1));
        CHECK(bands.energy(k, 3) == doctest::Approx(1));
    }
}

TEST_CASE("Dirac point closes the gap when 3 divides M") {
    HoppingKernel h = build_kane_mele({1, 0, 0, 0});
    BZGrid grid(6, /*require_dirac=*/true);
    BandTable bands = band_spectrum(h, grid);
    double min_gap = 1e9;
    for (int k = 0; k < grid.points(); ++k)
        min_gap = std::min(min_gap, bands.energy(k, 2) - bands.energy(k, 1));
    CHECK(min_gap < 1e-12);
    CHECK_THROWS_AS(BZGrid(7, true), std::invalid_argument);
}

TEST_CASE("spin-orbit gap equals 6 sqrt(3) lambda_SO at the Dirac momentum") {
    HoppingKernel h = build_kane_mele({1, 0, 0.06, 0});
    BZGrid grid(30);
    BandTable bands = band_spectrum(h, grid);
    double min_gap = 1e9;
    for (int k = 0; k < grid.points(); ++k)
        min_gap = std::min(min_gap, bands.energy(k, 2) - bands.energy(k, 1));
    CHECK(std::abs(min_gap - 6.0 * std::sqrt(3.0) * 0.06) < 1e-6);
}

TEST_CASE("gap detection") {
    SUBCASE("open gap with Rashba") {
        HoppingKernel h = build_kane_mele({1, 0, 0.06, 0.05});
        GapInfo gap = detect_gap(band_spectrum(h, BZGrid(30)), 2);
        CHECK(gap.width() > 0.1);
        CHECK(gap.mu == doctest::Approx(0.5 * (gap.a + gap.b)));
    }
    SUBCASE("Dirac semimetal is rejected") {
        HoppingKernel h = build_kane_mele({1, 0, 0, 0});
        CHECK_THROWS_AS(detect_gap(band_spectrum(h, BZGrid(30)), 2), GapClosed);
    }
    SUBCASE("flat bands") {
        HoppingKernel h = build_kane_mele({0, 1, 0, 0});
        GapInfo gap = detect_gap(band_spectrum(h, BZGrid(6)), 2);
        CHECK(gap.a == doctest::Approx(-1));
        CHECK(gap.b == doctest::Approx(1));
        CHECK(gap.mu == doctest::Approx(0));
    }
    SUBCASE("mu outside the gap is rejected") {
        HoppingKernel h = build_kane_mele({0, 1, 0, 0});
        CHECK_THROWS_AS(detect_gap(band_spectrum(h, BZGrid(6)), 2, 1.5), GapClosed);
    }
}

TEST_CASE("fermi fibers are exact spectral projectors") {
    SUBCASE("atomic limit fills the B sublattice") {
        HoppingKernel h = build_kane_mele({0, 1, 0, 0});
        BZGrid grid(6);
        GapInfo gap = detect_gap(band_spectrum(h, grid), 2);
        FiberField f = fermi_fibers(h, grid, gap);
        Mat expect = Mat::Zero(4, 4);
        expect.diagonal() << 0, 0, 1, 1;
        for (const auto& p : f.projectors) CHECK((p - expect).norm() < 1e-13);
    }
    SUBCASE("idempotent, hermitian, constant rank") {
        HoppingKernel h = build_kane_mele({1, 0.1, 0.06, 0.05});
        BZGrid grid(30);
        GapInfo gap = detect_gap(band_spectrum(h, grid), 2);
        FiberField f = fermi_fibers(h, grid, gap);
        for (const auto& p : f.projectors) {
            CHECK((p * p - p).norm() < 1e-12);
            CHECK((p - Mat(p.adjoint())).norm() < 1e-12);
            CHECK(std::abs(p.trace().real() - 2.0) < 1e-10);
        }
    }
}

TEST_CASE("projection kernel of a k-independent fiber is on-site") {
    HoppingKernel h = build_kane_mele({0, 1, 0, 0});
    BZGrid grid(8);
    GapInfo gap = detect_gap(band_spectrum(h, grid), 2);
    FiberField f = fermi_fibers(h, grid, gap);
    FermiProjectionKernel p = projection_kernel(f, 3, gap.mu, 2);
    Mat expect = Mat::Zero(4, 4);
    expect.diagonal() << 0, 0, 1, 1;
    CHECK((p.kernel.block({0, 0}) - expect).norm() < 1e-14);
    for (int n2 = -3; n2 <= 3; ++n2)
        for (int n1 = -3; n1 <= 3; ++n1)
            if (n1 || n2) CHECK(p.kernel.block({n1, n2}).norm() < 1e-14);
    CHECK(p.fit.degenerate);
    CHECK(p.tail_estimate == 0.0);
}

TEST_CASE("aliasing guard") {
    HoppingKernel h = build_kane_mele({0, 1, 0, 0});
    BZGrid grid(8);
    GapInfo gap = detect_gap(band_spectrum(h, grid), 2);
    FiberField f = fermi_fibers(h, grid, gap);
    CHECK_THROWS_AS(projection_kernel(f, 4, gap.mu, 2), AliasingRisk);
}

TEST_CASE("unit-cell trace of the Kane-Mele projection kernel") {
    const FermiProjectionKernel& p = cached_projection(kRashba, 48, 12);
    CHECK(std::abs(p.kernel.block({0, 0}).trace().real() - 2.0) < 1e-10);
    CHECK(std::abs(p.kernel.block({0, 0}).trace().imag()) < 1e-12);
}

TEST_CASE("decay fit: negative slope; quality improves with the gap") {
    const FermiProjectionKernel& p = cached_projection(kRashba, 48, 12);
    DecayFit fit = decay_profile(p);
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.zeta > 0);  // slope -1/zeta < 0
    CHECK(fit.c < 10.0);
    CHECK(fit.r_squared > 0.9);
    // The ell-1 envelope of the honeycomb kernel is anisotropic (the
    // near-diagonal ray decays at half the ell-1 rate of the axes), which
    // caps the single-exponential fit quality at narrow gaps. A wide gap
    // gives a clean line.
    const FermiProjectionKernel& wide = cached_projection({1.0, 0.1, 0.2, 0.0}, 48, 23);
    DecayFit full = decay_profile(wide);
    CHECK(full.r_squared >= 0.99);
}

TEST_CASE("wider gap shortens the decay length") {
    const FermiProjectionKernel& narrow = cached_projection(kTopological, 30, 13);
    const FermiProjectionKernel& wide =
        cached_projection({1.0, 0.1, 0.2, 0.0}, 30, 13);
    CHECK_FALSE(narrow.fit.degenerate);
    CHECK_FALSE(wide.fit.degenerate);
    CHECK(wide.fit.zeta < narrow.fit.zeta);
}

TEST_CASE("kernel self-adjointness and rank constancy") {
    const FermiProjectionKernel& p = cached_projection(kRashba, 30, 10);
    CHECK(p.kernel.self_adjointness_residual() < 1e-13);
    for (const auto& fib : p.fibers.projectors)
        CHECK(std::abs(fib.trace().real() - 2.0) < 1e-10);
}

TEST_CASE("grid refinement stability when the decay length is small") {
    // Needs zeta_P << M: the aliasing difference scales like the kernel mass
    // at distance M - R.
    const KaneMeleParams wide{1.0, 0.1, 0.2, 0.0};
    const FermiProjectionKernel& coarse = cached_projection(wide, 30, 8);
    const FermiProjectionKernel& fine = cached_projection(wide, 60, 8);
    double diff = 0.0;
    for (int n2 = -8; n2 <= 8; ++n2)
        for (int n1 = -8; n1 <= 8; ++n1)
            diff = std::max(diff, operator_norm(coarse.kernel.block({n1, n2}) -
                                                fine.kernel.block({n1, n2})));
    CHECK(diff < 1e-8);
}

TEST_CASE("recommended radius policy") {
    CHECK(recommended_radius(48) == 23);
    DecayFit fit;
    fit.zeta = 0.25;
    fit.certified_c = 1.0;
    CHECK(recommended_radius(48, &fit) == 9);
    fit.degenerate = true;
    CHECK(recommended_radius(48, &fit) == 23);
}

}  // TEST_SUITE
