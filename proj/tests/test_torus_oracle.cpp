#include <doctest.h>

#include <algorithm>

#include "spinkubo/errors.hpp"
#include "spinkubo/spectral.hpp"
#include "spinkubo/torus_oracle.hpp"
#include "spinkubo/transport.hpp"
#include "test_helpers.hpp"

using namespace spinkubo;
using namespace spinkubo::testing;

TEST_SUITE("torus_oracle") {

TEST_CASE("atomic limit gives a diagonal matrix") {
    TorusSystem sys = build_torus(build_kane_mele({0, 1, 0, 0}), 5);
    CHECK(sys.dim() == 100);
    for (int r = 0; r < sys.dim(); ++r)
        for (int c = 0; c < sys.dim(); ++c)
            if (r != c) CHECK(std::abs(sys.hamiltonian(r, c)) == 0.0);
}

TEST_CASE("wrapping guards") {
    HoppingKernel km = build_kane_mele(kRashba);  // range 2
    CHECK_THROWS_AS(build_torus(km, 3), LTooSmall);
    CHECK_THROWS_AS(build_torus(km, 6), std::invalid_argument);  // even side
    CHECK_NOTHROW(build_torus(km, 5));
}

TEST_CASE("pure hopping has three couplings per row") {
    TorusSystem sys = build_torus(build_kane_mele({1, 0, 0, 0}), 9);
    for (int r = 0; r < sys.dim(); ++r) {
        int nonzero = 0;
        for (int c = 0; c < sys.dim(); ++c)
            if (std::abs(sys.hamiltonian(r, c)) > 0) ++nonzero;
        CHECK(nonzero == 3);
    }
}

TEST_CASE("spectral duality with the M = L grid") {
    HoppingKernel km = build_kane_mele(kRashba);
    TorusSystem sys = build_torus(km, 9);
    std::vector<double> torus = torus_spectrum(sys);
    BandTable bands = band_spectrum(km, BZGrid(9));
    std::vector<double> grid(bands.energies.begin(), bands.energies.end());
    std::sort(grid.begin(), grid.end());
    REQUIRE(torus.size() == grid.size());
    for (size_t i = 0; i < torus.size(); ++i)
        CHECK(std::abs(torus[i] - grid[i]) < 1e-12);
}

TEST_CASE("dense Fermi projection") {
    SUBCASE("atomic limit projects onto the B sublattice") {
        TorusSystem sys = build_torus(build_kane_mele({0, 1, 0, 0}), 5);
        Mat p = torus_fermi_projection(sys, 0.0);
        CHECK(std::abs(p.trace().real() - 2 * 25) < 1e-10);
        Mat expect = Mat::Zero(4, 4);
        expect.diagonal() << 0, 0, 1, 1;
        CHECK((torus_kernel_block(sys, p, {0, 0}) - expect).norm() < 1e-12);
        CHECK_THROWS_AS(torus_fermi_projection(sys, 1.0), GapClosed);
    }
    SUBCASE("half filling of the gapped Kane-Mele model") {
        TorusSystem sys = build_torus(build_kane_mele(kRashba), 9);
        const FermiProjectionKernel& pipe = cached_projection(kRashba, 9, 4);
        Mat p = torus_fermi_projection(sys, pipe.mu);
        CHECK(std::abs(p.trace().real() - 2.0 * 81) < 1e-9);
        CHECK((p * p - p).norm() < 1e-12);
        CHECK((p - Mat(p.adjoint())).norm() < 1e-13);
    }
}

TEST_CASE("projector duality: translation diagonal equals the synthesized kernel") {
    TorusSystem sys = build_torus(build_kane_mele(kRashba), 9);
    const FermiProjectionKernel& pipe = cached_projection(kRashba, 9, 4);
    Mat dense = torus_fermi_projection(sys, pipe.mu);
    for (int n2 = -4; n2 <= 4; ++n2)
        for (int n1 = -4; n1 <= 4; ++n1)
            CHECK(operator_norm(torus_kernel_block(sys, dense, {n1, n2}) -
                                pipe.kernel.block({n1, n2})) < 1e-12);
}

TEST_CASE("sigma cross-validation at L = 15") {
    for (const KaneMeleParams* prm : {&kTopological, &kRashba}) {
        TorusSystem sys = build_torus(build_kane_mele(*prm), 15);
        const FermiProjectionKernel& pipe = cached_projection(*prm, 15, 7);
        Mat dense = torus_fermi_projection(sys, pipe.mu);
        const double sigma_torus = torus_sigma_K(sys, dense);
        const double sigma_pipe = sigma_K(pipe).value;
        CHECK(std::abs(sigma_torus - sigma_pipe) < 1e-6);
    }
}

TEST_CASE("atomic oracle transport vanishes") {
    TorusSystem sys = build_torus(build_kane_mele({0, 1, 0, 0}), 5);
    Mat p = torus_fermi_projection(sys, 0.0);
    CHECK(std::abs(torus_sigma_K(sys, p)) < 1e-12);
}

TEST_CASE("slow decay relative to the torus side is rejected") {
    // Weakly dimerized chain: the projector decays like (v/w)^{n_1}, i.e.
    // zeta = 1/ln(w/v) ~ 5.5, far beyond a side-9 torus.
    const double v = 0.5, w = 0.6;
    const InternalBasis basis{2};
    HoppingKernel chain(basis);
    Mat ab = Mat::Zero(4, 4), ba = Mat::Zero(4, 4);
    for (int s = 0; s < 2; ++s) {
        ab(basis.index(0, s), basis.index(1, s)) = 1.0;
        ba(basis.index(1, s), basis.index(0, s)) = 1.0;
    }
    chain.add({0, 0}, v * (ab + ba));
    chain.add({1, 0}, w * ba);
    chain.add({-1, 0}, w * ab);
    chain.validate();

    TorusSystem sys = build_torus(chain, 9);
    Mat dense = torus_fermi_projection(sys, 0.0);
    CHECK_THROWS_AS(torus_sigma_K(sys, dense), DecayTooSlow);
}

}  // TEST_SUITE
