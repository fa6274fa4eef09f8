#pragma once

#include <string>

#include "spinkubo/kernel_algebra.hpp"

namespace spinkubo {

// Partial traces indexed by odd L, carrying attached error bounds.
struct TraceSeries {
    enum class Verdict { converged, diverging, oscillating };

    struct Sample {
        int l = 0;
        Complex value{0, 0};
        double bound = 0.0;
    };

    std::string axis_label;  // "volume" for squares, "stripe-j" for stripes
    std::vector<Sample> samples;
    Verdict verdict = Verdict::oscillating;

    Complex limit() const { return samples.empty() ? Complex(0, 0) : samples.back().value; }
    static const char* verdict_name(Verdict v);
};

// Trace per unit volume of a periodic operator: the single unit-cell trace.
Complex tuv_periodic(const PeriodicKernel& a);

// TUV of an offset-periodic operator: the odd correction cancels over
// symmetric squares, leaving the unit-cell trace of the periodic part.
// Throws OddnessViolated when the sampled g fails antisymmetry in its axis.
Complex tuv_offset(const OffsetPeriodicKernel& a);

// Principal value trace: partial sums Tr(chi_L A chi_L) over odd-L squares.
TraceSeries pv_trace(const PeriodicKernel& a, int l_max);
TraceSeries pv_trace(const SwitchKernel& a, int l_max);
TraceSeries pv_trace(const WindowKernel& a, int l_max);

// Directional principal value trace over stripes |m_j| <= L/2; the transverse
// direction is summed to transverse_cutoff (or to the kernel's own structural
// support when that is smaller). Throws TailNotControlled when the transverse
// sum has no decay and does not vanish.
TraceSeries jpv_trace(const PeriodicKernel& a, int axis, int l_max,
                      int transverse_cutoff);
TraceSeries jpv_trace(const SwitchKernel& a, int axis, int l_max,
                      int transverse_cutoff);
TraceSeries jpv_trace(const WindowKernel& a, int axis, int l_max,
                      int transverse_cutoff);

// |tau(AB) - tau(BA)| evaluated through exact convolutions on the stored
// supports.
double cyclicity_residual(const PeriodicKernel& a, const PeriodicKernel& b);

// Appendix-style localization identities evaluated two-sided.
struct LocalizationCheck {
    // Tr([P,L1] S_z Pperp [P,L2])  vs  -Tr(chi_1 P X1 S_z Pperp X2 P chi_1)
    double residual12 = 0.0;
    double bound12 = 0.0;
    Complex lhs12{0, 0};
    // Tr(A [Pperp, L2] C) vs -Tr(A X2 Pperp chi_{2,1} C), A = [P,L1] S_z, C = A^dag
    double residual2 = 0.0;
    double bound2 = 0.0;
    Complex lhs2{0, 0};
};

LocalizationCheck verify_localization_identities(const PeriodicKernel& p,
                                                 const Mat& spin_z,
                                                 const SwitchFunction& switch1,
                                                 const SwitchFunction& switch2,
                                                 double tail_estimate);

// Convergence verdict: converged when the last three odd-L increments fall
// below tol_abs plus the attached bounds, diverging when they grow.
TraceSeries::Verdict classify_series(const std::vector<TraceSeries::Sample>& samples,
                                     double tol_abs = 1e-9);

}  // namespace spinkubo
