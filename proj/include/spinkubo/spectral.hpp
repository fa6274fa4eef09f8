#pragma once

#include <optional>

#include "spinkubo/kernel_algebra.hpp"
#include "spinkubo/lattice_model.hpp"
#include "spinkubo/types.hpp"

namespace spinkubo {

// Uniform Brillouin-zone grid k_ij = (2 pi i / M, 2 pi j / M), 0 <= i,j < M.
struct BZGrid {
    int m = 0;

    explicit BZGrid(int m_, bool require_dirac = false);
    double k1(int i) const { return 2.0 * kPi * i / m; }
    double k2(int j) const { return 2.0 * kPi * j / m; }
    int points() const { return m * m; }
    int index(int i, int j) const { return i + m * j; }
};

// Per-k sorted eigenvalues: points() rows of n_bands ascending energies.
struct BandTable {
    int m = 0;
    int n_bands = 0;
    std::vector<double> energies;

    double energy(int k_index, int band) const {
        return energies[static_cast<size_t>(k_index) * n_bands + band];
    }
};

struct GapInfo {
    double a = 0.0;   // sup of the lower spectrum on the grid
    double b = 0.0;   // inf of the upper spectrum
    double mu = 0.0;  // Fermi level, mid-gap by default
    int filled_bands = 0;

    double width() const { return b - a; }
};

// Spectral projectors P(k) on every grid point, constant rank.
struct FiberField {
    int m = 0;
    int dim = 0;
    int rank = 0;
    std::vector<Mat> projectors;  // grid.index(i,j) order

    const Mat& at(int i, int j) const {
        return projectors[static_cast<size_t>(i) + static_cast<size_t>(m) * j];
    }
};

// Truncated real-space Fermi projection P_{0,n}, ||n||_inf <= R, with the
// grid/Fermi-level metadata, the fitted decay constants, and the Bloch fibers
// it was synthesized from (the exact grid representation of the projector).
struct FermiProjectionKernel {
    PeriodicKernel kernel;
    FiberField fibers;
    int m = 0;
    double mu = 0.0;
    int filled_bands = 0;
    DecayFit fit;
    double tail_estimate = 0.0;

    int radius() const { return kernel.radius(); }
};

BandTable band_spectrum(const HoppingKernel& kernel, const BZGrid& grid);

// a = max_k band_filled, b = min_k band_{filled+1}; throws GapClosed when the
// gap is narrower than gap_tolerance or mu falls outside (a, b).
GapInfo detect_gap(const BandTable& bands, int filled_bands,
                   std::optional<double> mu = std::nullopt,
                   double gap_tolerance = 1e-8);

FiberField fermi_fibers(const HoppingKernel& kernel, const BZGrid& grid,
                        const GapInfo& gap, double gap_tolerance = 1e-8);

// Inverse discrete Fourier synthesis P_{0,n} = (1/M^2) sum_k e^{-i k.n} P(k).
// Throws AliasingRisk when R >= M/2.
FermiProjectionKernel projection_kernel(const FiberField& fibers, int truncation_radius,
                                        double mu, int filled_bands);

// Envelope decay fit of the stored kernel; pre R >= 4.
DecayFit decay_profile(const FermiProjectionKernel& p);

// Truncation radius policy: full fundamental domain before the decay length
// is known, min(M/2 - 1, ceil(36 zeta)) after.
int recommended_radius(int m, const DecayFit* fit = nullptr);

// Convenience: bands -> gap -> fibers -> kernel for a given model.
FermiProjectionKernel fermi_projection(const HoppingKernel& kernel, int m, int radius,
                                       int filled_bands,
                                       std::optional<double> mu = std::nullopt);

}  // namespace spinkubo
