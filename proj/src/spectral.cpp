#include "spinkubo/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "spinkubo/errors.hpp"

namespace spinkubo {

BZGrid::BZGrid(int m_, bool require_dirac) : m(m_) {
    if (m < 2) throw std::invalid_argument("BZ grid needs M >= 2");
    if (require_dirac && m % 3 != 0)
        throw std::invalid_argument("Dirac momenta on the grid need 3 | M");
}

BandTable band_spectrum(const HoppingKernel& kernel, const BZGrid& grid) {
    kernel.validate();
    BandTable table;
    table.m = grid.m;
    table.n_bands = kernel.dim();
    table.energies.resize(static_cast<size_t>(grid.points()) * table.n_bands);
    Eigen::SelfAdjointEigenSolver<Mat> solver;
    for (int j = 0; j < grid.m; ++j)
        for (int i = 0; i < grid.m; ++i) {
            solver.compute(bloch_fiber(kernel, grid.k1(i), grid.k2(j)),
                           Eigen::EigenvaluesOnly);
            const auto& ev = solver.eigenvalues();
            for (int b = 0; b < table.n_bands; ++b)
                table.energies[static_cast<size_t>(grid.index(i, j)) * table.n_bands +
                               b] = ev(b);
        }
    return table;
}

GapInfo detect_gap(const BandTable& bands, int filled_bands, std::optional<double> mu,
                   double gap_tolerance) {
    if (filled_bands < 1 || filled_bands >= bands.n_bands)
        throw std::invalid_argument("filled_bands must be in [1, 2N)");
    GapInfo gap;
    gap.filled_bands = filled_bands;
    gap.a = -std::numeric_limits<double>::infinity();
    gap.b = std::numeric_limits<double>::infinity();
    const int points = bands.m * bands.m;
    for (int k = 0; k < points; ++k) {
        gap.a = std::max(gap.a, bands.energy(k, filled_bands - 1));
        gap.b = std::min(gap.b, bands.energy(k, filled_bands));
    }
    if (!(gap.b - gap.a > gap_tolerance))
        throw GapClosed("spectral gap closed: b - a = " + std::to_string(gap.b - gap.a));
    gap.mu = mu.value_or(0.5 * (gap.a + gap.b));
    if (!(gap.mu > gap.a && gap.mu < gap.b))
        throw GapClosed("Fermi level " + std::to_string(gap.mu) +
                        " outside the spectral gap (" + std::to_string(gap.a) + ", " +
                        std::to_string(gap.b) + ")");
    return gap;
}

FiberField fermi_fibers(const HoppingKernel& kernel, const BZGrid& grid,
                        const GapInfo& gap, double gap_tolerance) {
    FiberField field;
    field.m = grid.m;
    field.dim = kernel.dim();
    field.rank = gap.filled_bands;
    field.projectors.resize(grid.points());
    Eigen::SelfAdjointEigenSolver<Mat> solver;
    for (int j = 0; j < grid.m; ++j)
        for (int i = 0; i < grid.m; ++i) {
            solver.compute(bloch_fiber(kernel, grid.k1(i), grid.k2(j)));
            const auto& ev = solver.eigenvalues();
            Mat p = Mat::Zero(field.dim, field.dim);
            int filled = 0;
            for (int b = 0; b < field.dim; ++b) {
                if (std::abs(ev(b) - gap.mu) < gap_tolerance)
                    throw GapClosed("eigenvalue within tolerance of mu at grid point");
                if (ev(b) < gap.mu) {
                    p += solver.eigenvectors().col(b) *
                         solver.eigenvectors().col(b).adjoint();
                    ++filled;
                }
            }
            if (filled != gap.filled_bands)
                throw GapClosed("filled-band count changed across the grid");
            field.projectors[grid.index(i, j)] = std::move(p);
        }
    return field;
}

FermiProjectionKernel projection_kernel(const FiberField& fibers, int truncation_radius,
                                        double mu, int filled_bands) {
    const int m = fibers.m;
    if (2 * truncation_radius >= m)
        throw AliasingRisk("truncation radius " + std::to_string(truncation_radius) +
                           " needs M > 2R, got M = " + std::to_string(m));
    FermiProjectionKernel out;
    out.m = m;
    out.mu = mu;
    out.filled_bands = filled_bands;
    out.fibers = fibers;
    out.kernel = PeriodicKernel(fibers.dim, truncation_radius);

    const int d = fibers.dim;
    const double norm = 1.0 / (m * m);
    // Phase table e^{-i 2 pi t s / M}.
    std::vector<Complex> phase(static_cast<size_t>(m) * m);
    for (int t = 0; t < m; ++t)
        for (int s = 0; s < m; ++s)
            phase[static_cast<size_t>(t) * m + s] =
                std::exp(Complex(0, -2.0 * kPi * t * s / m));
    auto phase_at = [&](int t, int n) {
        int s = ((n % m) + m) % m;
        return phase[static_cast<size_t>(t) * m + s];
    };

    Mat acc(d, d);
    for (int n2 = -truncation_radius; n2 <= truncation_radius; ++n2)
        for (int n1 = -truncation_radius; n1 <= truncation_radius; ++n1) {
            acc.setZero();
            for (int j = 0; j < m; ++j) {
                const Complex p2 = phase_at(j, n2);
                for (int i = 0; i < m; ++i)
                    acc += (phase_at(i, n1) * p2) * fibers.at(i, j);
            }
            out.kernel.set_block({n1, n2}, norm * acc);
        }
    out.fit = decay_profile_of(out.kernel);
    out.tail_estimate = out.fit.degenerate ? 0.0 : tail_bound(out.fit, truncation_radius);
    return out;
}

DecayFit decay_profile(const FermiProjectionKernel& p) {
    if (p.radius() < 4)
        throw std::invalid_argument("decay_profile needs truncation radius >= 4");
    return decay_profile_of(p.kernel);
}

int recommended_radius(int m, const DecayFit* fit) {
    const int full = m / 2 - 1;
    if (fit == nullptr || fit->degenerate || fit->zeta <= 0) return full;
    return std::min(full, static_cast<int>(std::ceil(fit->zeta * 36.0)));
}

FermiProjectionKernel fermi_projection(const HoppingKernel& kernel, int m, int radius,
                                       int filled_bands, std::optional<double> mu) {
    const BZGrid grid(m);
    const BandTable bands = band_spectrum(kernel, grid);
    const GapInfo gap = detect_gap(bands, filled_bands, mu);
    const FiberField fibers = fermi_fibers(kernel, grid, gap);
    return projection_kernel(fibers, radius, gap.mu, filled_bands);
}

}  // namespace spinkubo
