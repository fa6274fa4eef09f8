#include "spinkubo/trace_functionals.hpp"

#include <cmath>

#include "spinkubo/errors.hpp"

namespace spinkubo {

const char* TraceSeries::verdict_name(Verdict v) {
    switch (v) {
        case Verdict::converged: return "converged";
        case Verdict::diverging: return "diverging";
        default: return "oscillating";
    }
}

TraceSeries::Verdict classify_series(const std::vector<TraceSeries::Sample>& samples,
                                     double tol_abs) {
    if (samples.size() < 4) return TraceSeries::Verdict::oscillating;
    double inc[3];
    double tol[3];
    const size_t n = samples.size();
    for (int i = 0; i < 3; ++i) {
        inc[i] = std::abs(samples[n - 3 + i].value - samples[n - 4 + i].value);
        tol[i] = tol_abs + samples[n - 3 + i].bound + samples[n - 4 + i].bound;
    }
    if (inc[0] <= tol[0] && inc[1] <= tol[1] && inc[2] <= tol[2])
        return TraceSeries::Verdict::converged;
    // Diverging: increments keep their size and the partial sums drift
    // outward; bounded alternation is oscillating.
    const double mag3 = std::abs(samples[n - 1].value);
    const double mag2 = std::abs(samples[n - 2].value);
    const double mag1 = std::abs(samples[n - 3].value);
    if (inc[2] >= inc[1] && inc[1] >= inc[0] && inc[2] > tol[2] && mag3 > mag2 &&
        mag2 > mag1)
        return TraceSeries::Verdict::diverging;
    return TraceSeries::Verdict::oscillating;
}

Complex tuv_periodic(const PeriodicKernel& a) { return a.block({0, 0}).trace(); }

Complex tuv_offset(const OffsetPeriodicKernel& a) {
    if (a.g) {
        // Sample antisymmetry of g in the declared axis.
        for (int v = 1; v <= 5; ++v)
            for (int w : {-3, 0, 4}) {
                const Cell p = a.odd_axis == 1 ? Cell{v, w} : Cell{w, v};
                const Cell rp = a.odd_axis == 1 ? Cell{-v, w} : Cell{w, -v};
                if (std::abs(a.g(p) + a.g(rp)) > 1e-12 * (1.0 + std::abs(a.g(p))))
                    throw OddnessViolated("offset function g is not odd in axis " +
                                          std::to_string(a.odd_axis));
            }
    }
    return tuv_periodic(a.periodic);
}

namespace {

template <typename DiagFn>
TraceSeries square_series(int l_max, double bound, DiagFn&& diag) {
    TraceSeries series;
    series.axis_label = "volume";
    Complex running{0, 0};
    int prev_half = -1;
    for (int l = 1; l <= l_max; l += 2) {
        const int half = (l - 1) / 2;
        // Add the new boundary ring only.
        for (int m2 = -half; m2 <= half; ++m2)
            for (int m1 = -half; m1 <= half; ++m1) {
                if (std::max(std::abs(m1), std::abs(m2)) <= prev_half) continue;
                running += diag(Cell{m1, m2});
            }
        prev_half = half;
        series.samples.push_back({l, running, bound});
    }
    series.verdict = classify_series(series.samples);
    return series;
}

template <typename DiagFn>
TraceSeries stripe_series(int axis, int l_max, int transverse_lo, int transverse_hi,
                          double bound, DiagFn&& diag) {
    TraceSeries series;
    series.axis_label = "stripe-" + std::to_string(axis);
    Complex running{0, 0};
    int prev_half = -1;
    for (int l = 1; l <= l_max; l += 2) {
        const int half = (l - 1) / 2;
        for (int c = -half; c <= half; ++c) {
            if (std::abs(c) <= prev_half) continue;
            for (int t = transverse_lo; t <= transverse_hi; ++t)
                running += diag(axis == 1 ? Cell{c, t} : Cell{t, c});
        }
        prev_half = half;
        series.samples.push_back({l, running, bound});
    }
    series.verdict = classify_series(series.samples);
    return series;
}

}  // namespace

TraceSeries pv_trace(const PeriodicKernel& a, int l_max) {
    const Complex cell = tuv_periodic(a);
    return square_series(l_max, 0.0, [&](Cell) { return cell; });
}

TraceSeries pv_trace(const SwitchKernel& a, int l_max) {
    return square_series(l_max, 0.0, [&](Cell m) {
        return a.block(m.coord(a.axis()), {0, 0}).trace();
    });
}

TraceSeries pv_trace(const WindowKernel& a, int l_max) {
    return square_series(l_max, a.attached_tail(), [&](Cell m) {
        return a.in_rows(m) ? a.diagonal_block(m).trace() : Complex(0, 0);
    });
}

TraceSeries jpv_trace(const PeriodicKernel& a, int axis, int l_max,
                      int transverse_cutoff) {
    const Complex cell = tuv_periodic(a);
    if (std::abs(cell) > 1e-14)
        throw TailNotControlled(
            "periodic kernel has constant nonvanishing diagonal; the transverse sum "
            "of the stripe trace does not converge");
    (void)transverse_cutoff;
    return stripe_series(axis, l_max, 0, 0, 0.0, [&](Cell) { return Complex(0, 0); });
}

TraceSeries jpv_trace(const SwitchKernel& a, int axis, int l_max,
                      int transverse_cutoff) {
    if (a.axis() == axis) {
        // Transverse direction is the invariant one: nothing decays there, so
        // every slice's diagonal trace must vanish identically.
        for (int c = a.c_lo() - 1; c <= a.c_hi() + 1; ++c)
            if (std::abs(a.block(c, {0, 0}).trace()) > 1e-14)
                throw TailNotControlled(
                    "switch kernel diagonal is constant along the transverse axis");
        return stripe_series(axis, l_max, 0, 0, 0.0,
                             [&](Cell) { return Complex(0, 0); });
    }
    // Transverse = wall axis; tails beyond the window must not contribute.
    const Complex lt = a.tail_left().block({0, 0}).trace();
    const Complex rt = a.tail_right().block({0, 0}).trace();
    if (std::abs(lt) > 1e-14 || std::abs(rt) > 1e-14)
        throw TailNotControlled("switch kernel tails carry nonvanishing diagonal trace");
    const int lo = std::min(a.c_lo(), -transverse_cutoff);
    const int hi = std::max(a.c_hi(), transverse_cutoff);
    return stripe_series(axis, l_max, lo, hi, 0.0, [&](Cell m) {
        return a.block(m.coord(a.axis()), {0, 0}).trace();
    });
}

TraceSeries jpv_trace(const WindowKernel& a, int axis, int l_max,
                      int transverse_cutoff) {
    const int other = axis == 1 ? 2 : 1;
    const int lo = std::max(other == 1 ? a.row_lo().n1 : a.row_lo().n2,
                            -transverse_cutoff);
    const int hi = std::min(other == 1 ? a.row_hi().n1 : a.row_hi().n2,
                            transverse_cutoff);
    return stripe_series(axis, l_max, lo, hi, a.attached_tail(), [&](Cell m) {
        return a.in_rows(m) ? a.diagonal_block(m).trace() : Complex(0, 0);
    });
}

double cyclicity_residual(const PeriodicKernel& a, const PeriodicKernel& b) {
    Complex tau_ab{0, 0}, tau_ba{0, 0};
    const int r = std::min(a.radius(), b.radius());
    for (int n2 = -r; n2 <= r; ++n2)
        for (int n1 = -r; n1 <= r; ++n1) {
            const Cell n{n1, n2};
            if (a.nonzero(n) && b.nonzero(-n))
                tau_ab += (a.block(n) * b.block(-n)).trace();
            if (b.nonzero(n) && a.nonzero(-n))
                tau_ba += (b.block(n) * a.block(-n)).trace();
        }
    return std::abs(tau_ab - tau_ba);
}

namespace {

// Tr(U V) for switch kernels on distinct axes; both must have zero tails so
// the trace is a finite sum over the crossing region.
Complex trace_cross_product(const SwitchKernel& u, const SwitchKernel& v) {
    if (u.axis() == v.axis()) throw std::invalid_argument("need distinct axes");
    if (!u.zero_tails() || !v.zero_tails())
        throw TailNotControlled("trace of cross product with uncontrolled tails");
    Complex tr{0, 0};
    // Row coordinate along u's axis within u's window; along v's axis within
    // v's window dilated by u's radius.
    const int a_lo = u.c_lo(), a_hi = u.c_hi();
    const int b_lo = v.c_lo() - u.radius(), b_hi = v.c_hi() + u.radius();
    for (int ca = a_lo; ca <= a_hi; ++ca)
        for (int cb = b_lo; cb <= b_hi; ++cb) {
            const Cell m = u.axis() == 1 ? Cell{ca, cb} : Cell{cb, ca};
            for (int e2 = -u.radius(); e2 <= u.radius(); ++e2)
                for (int e1 = -u.radius(); e1 <= u.radius(); ++e1) {
                    const Cell e{e1, e2};
                    Mat ub = u.slice_block(ca, e);
                    if (ub.squaredNorm() == 0) continue;
                    Mat vb = v.slice_block((m + e).coord(v.axis()), -e);
                    if (vb.squaredNorm() == 0) continue;
                    tr += (ub * vb).trace();
                }
        }
    return tr;
}

}  // namespace

LocalizationCheck verify_localization_identities(const PeriodicKernel& p,
                                                 const Mat& spin_z,
                                                 const SwitchFunction& switch1,
                                                 const SwitchFunction& switch2,
                                                 double tail_estimate) {
    LocalizationCheck out;
    const int d = p.dim();
    const PeriodicKernel pperp = PeriodicKernel::identity(d) - p;
    const PeriodicKernel szpperp = mul_internal_left(spin_z, pperp);

    const SwitchKernel c1 = commutator_switch(p, switch1);    // [P, L1]
    const SwitchKernel c1s = mul_internal_right(c1, spin_z);  // [P, L1] S_z
    const SwitchKernel c2 = commutator_switch(p, switch2);    // [P, L2]

    // Two-switch identity: Tr([P,L1] S_z Pperp [P,L2]) against the unit-cell
    // position form -Tr(chi_1 P X1 S_z Pperp X2 P chi_1).
    {
        const SwitchKernel left = compose(c1s, pperp);
        const Complex lhs = trace_cross_product(left, c2);
        // Position form: sum_{a,b} P_{0,a} a1 (S_z Pperp)_{0,b-a} b2 P_{b,0}.
        Complex rhs{0, 0};
        const int r = p.radius();
        const int rw = szpperp.radius();
        for (int a2 = -r; a2 <= r; ++a2)
            for (int a1 = -r; a1 <= r; ++a1) {
                const Cell a{a1, a2};
                if (a1 == 0 || !p.nonzero(a)) continue;
                const Mat pa = double(a1) * p.block(a);
                for (int b2 = -r; b2 <= r; ++b2)
                    for (int b1 = -r; b1 <= r; ++b1) {
                        const Cell b{b1, b2};
                        if (b2 == 0 || !p.nonzero(-b)) continue;
                        const Cell diff = b - a;
                        if (diff.norm_inf() > rw || !szpperp.nonzero(diff)) continue;
                        rhs += (pa * szpperp.block(diff) * double(b2) * p.block(-b))
                                   .trace();
                    }
            }
        out.lhs12 = lhs;
        out.residual12 = std::abs(lhs + rhs);  // identity reads Tr(...) = -Tr(...)
    }

    // Single-switch identity: Tr(A [Pperp, L2] C) against -Tr(A X2 Pperp
    // chi_{2,1} C), with A = [P,L1] S_z and C = A^dag.  The left side is
    // evaluated as Tr((C A) [Pperp,L2]), an exact cyclic reordering of the
    // finite sums.
    {
        const SwitchKernel a_k = c1s;
        const SwitchKernel c_k = adjoint(c1s);
        const SwitchKernel pc2 = commutator_switch(pperp, switch2);
        const SwitchKernel ca = compose_same_axis(c_k, a_k);
        const Complex lhs = trace_cross_product(ca, pc2);

        // -Tr(A X2 Pperp chi_{2,1} C): q runs over the line q2 = 0.
        Complex rhs{0, 0};
        const int ra = a_k.radius(), rc = c_k.radius(), rp = pperp.radius();
        for (int q1 = c_k.c_lo(); q1 <= c_k.c_hi(); ++q1) {
            const Cell q{q1, 0};
            for (int e2 = -rc; e2 <= rc; ++e2)
                for (int e1 = -rc; e1 <= rc; ++e1) {
                    const Cell m = q + Cell{e1, e2};
                    Mat cb = c_k.block(q1, {e1, e2});
                    if (cb.squaredNorm() == 0) continue;
                    for (int f2 = -ra; f2 <= ra; ++f2)
                        for (int f1 = -ra; f1 <= ra; ++f1) {
                            const Cell pcell = m + Cell{f1, f2};
                            if (pcell.n2 == 0) continue;  // X2 weight vanishes
                            const Cell pq = q - pcell;
                            if (pq.norm_inf() > rp || !pperp.nonzero(pq)) continue;
                            Mat ab = a_k.block(m.n1, {f1, f2});
                            if (ab.squaredNorm() == 0) continue;
                            rhs += (ab * double(pcell.n2) * pperp.block(pq) * cb)
                                       .trace();
                        }
                }
        }
        out.lhs2 = lhs;
        out.residual2 = std::abs(lhs + rhs);
    }

    // Conservative attached bounds: truncation tail times the Holmgren sizes of
    // the remaining factors, once per factor replaced; the position weights
    // contribute at most the stored radius.
    const double hp = holmgren_norm(p);
    const double scale = (1.0 + hp) * (1.0 + hp) * (1.0 + hp);
    out.bound12 = 8.0 * tail_estimate * scale * (1.0 + 2.0 * p.radius());
    out.bound2 = 8.0 * tail_estimate * scale * (1.0 + 2.0 * p.radius());
    return out;
}

}  // namespace spinkubo
