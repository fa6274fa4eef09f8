#pragma once

#include "spinkubo/spectral.hpp"
#include "spinkubo/trace_functionals.hpp"

namespace spinkubo {

// Transport coefficients are reported in units of the conductance quantum
// e^2/h = 1/(2 pi); the sign convention is tied to the (k1, k2) orientation
// fixed by the dimerization and matches chern_fhs by construction.
inline constexpr double kTransportScale = 2.0 * kPi;

struct ValueWithBound {
    double value = 0.0;
    double imag_part = 0.0;
    double bound = 0.0;
};

struct ChernResult {
    int integer = 0;
    double raw = 0.0;
    double residual = 0.0;
};

struct GKResult {
    TraceSeries series;
    double value = 0.0;
    double imag_part = 0.0;
    double bound = 0.0;
};

struct GKDecomposition {
    double g_a_over_l = 0.0;       // reported units; equals sigma_K up to bounds
    double g_a_imag = 0.0;
    TraceSeries g_b_series;        // stripe partial sums, each must vanish
    double bound = 0.0;
};

struct TransportReport {
    ValueWithBound sigma_k;
    ValueWithBound torque_tau;
    GKResult conductance;
    std::string switch1_name;
    std::string switch2_name;
    KaneMeleParams params;
    int m = 0;
    int radius = 0;
};

struct InvariantReport {
    int chern_total = 0;
    double chern_total_residual = 0.0;
    bool spin_commuting = false;
    double spin_commuting_norm = 0.0;
    int chern_up = 0;
    int chern_down = 0;
    double chern_spin_residual = 0.0;
};

// Spin torque-response operator T_sz = i P [[P,S_z],[P,X_2]] P; periodic and
// bounded, assembled through exact convolutions on the stored supports.
PeriodicKernel torque_kernel(const FermiProjectionKernel& p);

// tau(T_sz); vanishes for every gapped periodic near-sighted Hamiltonian.
ValueWithBound torque_response(const FermiProjectionKernel& p);

// Sigma_K^{s_z} = i P [[P, X_1 S_z], [P, X_2]] P, stored as periodic part plus
// the odd-offset correction g(p) = p_1 times the torque kernel.
OffsetPeriodicKernel sigma_K_kernel(const FermiProjectionKernel& p);

// Kubo-like spin conductivity: trace per unit volume of Sigma_K (reported
// units, imaginary part checked against 1e-9).
ValueWithBound sigma_K(const FermiProjectionKernel& p);

// Kubo-like spin conductance G_K(L1, L2) as the 1-directional principal value
// trace of i P [[P, L1 S_z], [P, L2]] P over stripes |m_1| <= L/2. The
// transverse direction is a finite sum by the wall confinement of the
// [P, L2] factors.
GKResult conductance_GK(const FermiProjectionKernel& p, const SwitchFunction& switch1,
                        const SwitchFunction& switch2, int l_max,
                        int transverse_cutoff);

// Proof-decomposition diagnostics with the ramp X_1^(l): the G_a part equals
// sigma_K after dividing by l; the G_b stripe partial sums all vanish.
GKDecomposition GK_decomposition(const FermiProjectionKernel& p, int l,
                                 const SwitchFunction& switch2, int l_max);

// tau(i P [[P,X_1],[P,X_2]] P); zero for time-reversal-symmetric models.
ValueWithBound charge_conductivity(const FermiProjectionKernel& p);
// Same functional on an explicit truncated kernel (e.g. one spin block).
ValueWithBound charge_conductivity_kernel(const PeriodicKernel& p, double tail);
// Grid-exact evaluation from fibers (used for spin blocks).
ValueWithBound charge_conductivity_grid(const FiberField& fibers,
                                        double floor_bound = 0.0);

// Gauge-invariant plaquette (lattice field-strength) Chern number of a
// constant-rank projector field; integer-exact away from singular plaquettes.
ChernResult chern_fhs(const FiberField& fibers);

// Holmgren bound of [H, S_z]; zero iff the model is spin-commuting.
double spin_commuting_check(const HoppingKernel& kernel);

// Spin block of a fiber field / kernel (valid in the spin-commuting case).
FiberField spin_block_fibers(const FiberField& fibers, int spin);
PeriodicKernel spin_block_kernel(const PeriodicKernel& p, int spin);

InvariantReport compute_invariants(const HoppingKernel& kernel,
                                   const FiberField& fibers);

}  // namespace spinkubo
