#include "spinkubo/torus_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "spinkubo/errors.hpp"
#include "spinkubo/kernel_algebra.hpp"
#include "spinkubo/transport.hpp"

namespace spinkubo {

TorusSystem build_torus(const HoppingKernel& kernel, int l) {
    if (l % 2 == 0) throw std::invalid_argument("torus side must be odd");
    if (l <= 2 * kernel.range())
        throw LTooSmall("torus side " + std::to_string(l) +
                        " overlaps wrapped hoppings of range " +
                        std::to_string(kernel.range()));
    kernel.validate();
    TorusSystem sys;
    sys.l = l;
    sys.dim_internal = kernel.dim();
    sys.hamiltonian = Mat::Zero(sys.dim(), sys.dim());
    const int h = sys.half();
    const int d = sys.dim_internal;
    for (int m2 = -h; m2 <= h; ++m2)
        for (int m1 = -h; m1 <= h; ++m1)
            for (const auto& [off, blk] : kernel.hoppings()) {
                const int n1 = sys.wrap(m1 + off.n1);
                const int n2 = sys.wrap(m2 + off.n2);
                sys.hamiltonian.block(sys.state_index(m1, m2, 0),
                                      sys.state_index(n1, n2, 0), d, d) += blk;
            }
    const double herm =
        (sys.hamiltonian - Mat(sys.hamiltonian.adjoint())).cwiseAbs().maxCoeff();
    if (herm > 1e-12)
        throw NumericalError("torus Hamiltonian lost hermiticity: " +
                             std::to_string(herm));
    return sys;
}

std::vector<double> torus_spectrum(const TorusSystem& system) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(system.hamiltonian,
                                              Eigen::EigenvaluesOnly);
    std::vector<double> out(solver.eigenvalues().data(),
                            solver.eigenvalues().data() + system.dim());
    return out;
}

Mat torus_fermi_projection(const TorusSystem& system, double mu) {
    Eigen::SelfAdjointEigenSolver<Mat> solver(system.hamiltonian);
    const auto& ev = solver.eigenvalues();
    Mat p = Mat::Zero(system.dim(), system.dim());
    for (int b = 0; b < system.dim(); ++b) {
        if (std::abs(ev(b) - mu) < 1e-10)
            throw GapClosed("torus eigenvalue within 1e-10 of mu");
        if (ev(b) < mu)
            p += solver.eigenvectors().col(b) * solver.eigenvectors().col(b).adjoint();
    }
    return p;
}

Mat torus_kernel_block(const TorusSystem& system, const Mat& projector, Cell n) {
    const int d = system.dim_internal;
    return projector.block(system.state_index(0, 0, 0),
                           system.state_index(n.n1, n.n2, 0), d, d);
}

double torus_sigma_K(const TorusSystem& system, const Mat& projector) {
    const int d = system.dim_internal;
    const int h = system.half();
    const int nn = system.dim();

    // Decay check on the central row.
    PeriodicKernel row(d, h);
    for (int n2 = -h; n2 <= h; ++n2)
        for (int n1 = -h; n1 <= h; ++n1)
            row.set_block({n1, n2}, torus_kernel_block(system, projector, {n1, n2}));
    const DecayFit fit = decay_profile_of(row);
    if (!fit.degenerate && fit.zeta > 0 && system.l < 4.0 * fit.zeta)
        throw DecayTooSlow("projector decay length " + std::to_string(fit.zeta) +
                           " too large for torus side " + std::to_string(system.l));

    const Mat sz_small = spin_z_matrix(InternalBasis{d / 2});
    Mat sz = Mat::Zero(nn, nn);
    for (int s = 0; s < system.sites(); ++s) sz.block(s * d, s * d, d, d) = sz_small;

    // Minimal-image commutators with the position operators; the Leibniz
    // remainder X_1 [P,S_z] keeps the literal site coordinate.
    Mat comm_x1(nn, nn), comm_x2(nn, nn);
    for (int m2 = -h; m2 <= h; ++m2)
        for (int m1 = -h; m1 <= h; ++m1)
            for (int n2 = -h; n2 <= h; ++n2)
                for (int n1 = -h; n1 <= h; ++n1) {
                    const int r = system.state_index(m1, m2, 0);
                    const int c = system.state_index(n1, n2, 0);
                    const double w1 = system.wrap(n1 - m1);
                    const double w2 = system.wrap(n2 - m2);
                    comm_x1.block(r, c, d, d) = w1 * projector.block(r, c, d, d);
                    comm_x2.block(r, c, d, d) = w2 * projector.block(r, c, d, d);
                }

    Mat x1 = Mat::Zero(nn, nn);
    for (int m2 = -h; m2 <= h; ++m2)
        for (int m1 = -h; m1 <= h; ++m1)
            for (int k = 0; k < d; ++k) {
                const int idx = system.state_index(m1, m2, k);
                x1(idx, idx) = m1;
            }

    const Mat comm_sz = projector * sz - sz * projector;
    const Mat d_op = comm_x1 * sz + x1 * comm_sz;  // [P, X_1 S_z]
    const Mat inner = d_op * comm_x2 - comm_x2 * d_op;

    // Central-site block of i P inner P.
    const int c0 = system.state_index(0, 0, 0);
    const Mat left = projector.block(c0, 0, d, nn) * inner;
    const Mat block = left * projector.block(0, c0, nn, d);
    const Complex raw = Complex(0, 1) * block.trace();
    const double value = kTransportScale * raw.real();
    if (std::abs(kTransportScale * raw.imag()) > 1e-9)
        throw NumericalError("torus sigma_K has large imaginary part");
    return value;
}

}  // namespace spinkubo
