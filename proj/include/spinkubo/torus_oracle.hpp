#pragma once

#include "spinkubo/lattice_model.hpp"
#include "spinkubo/types.hpp"

namespace spinkubo {

// Dense Hamiltonian on an odd L x L torus: the brute-force cross-check for the
// k-space pipeline. Sites are indexed (n1, n2) in [-(L-1)/2, (L-1)/2]^2 with
// the 2N internal states per site.
struct TorusSystem {
    int l = 0;
    int dim_internal = 0;
    Mat hamiltonian;

    int sites() const { return l * l; }
    int dim() const { return sites() * dim_internal; }
    int half() const { return (l - 1) / 2; }
    int site_index(int n1, int n2) const {
        return (n1 + half()) + l * (n2 + half());
    }
    int state_index(int n1, int n2, int internal) const {
        return site_index(n1, n2) * dim_internal + internal;
    }
    // Coordinate difference wrapped to (-L/2, L/2).
    int wrap(int delta) const {
        int w = ((delta % l) + l) % l;
        if (w > l / 2) w -= l;
        return w;
    }
};

// Wraps each hopping offset cyclically; throws LTooSmall when L <= 2 range.
TorusSystem build_torus(const HoppingKernel& kernel, int l);

// Sorted eigenvalues of the dense torus Hamiltonian.
std::vector<double> torus_spectrum(const TorusSystem& system);

// Dense spectral projector onto energies below mu; throws GapClosed when an
// eigenvalue sits within 1e-10 of mu.
Mat torus_fermi_projection(const TorusSystem& system, double mu);

// Translation-diagonal block P_{0,n}: the (central site, site n) block.
Mat torus_kernel_block(const TorusSystem& system, const Mat& projector, Cell n);

// Trace of the unit-cell block of i P [[P, X_1 S_z], [P, X_2]] P with
// minimal-image displacements, in the same reported units as the pipeline.
// Throws DecayTooSlow when the central-row decay length is not << L.
double torus_sigma_K(const TorusSystem& system, const Mat& projector);

}  // namespace spinkubo
