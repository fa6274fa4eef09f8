#pragma once

#include <functional>

#include "spinkubo/lattice_model.hpp"
#include "spinkubo/types.hpp"

namespace spinkubo {

// Envelope decay fit ||A_{0,n}|| <= C e^{-||n||_1 / zeta}. certified_c is C
// raised so the bound dominates every stored shell maximum, which makes the
// derived tail bounds valid for the data actually stored.
struct DecayFit {
    double c = 0.0;
    double zeta = 0.0;
    double r_squared = 0.0;
    double certified_c = 0.0;
    bool degenerate = false;
};

// Closed-form geometric-series bound on sum_{||n||_inf > W} C e^{-||n||_1/zeta}.
double tail_bound(const DecayFit& fit, int window_radius);
double tail_bound(double c, double zeta, int window_radius);

// Periodic operator kernel: blocks A_{0,n} on ||n||_inf <= radius, with
// A_{m,n} = A_{0,n-m}. Contiguous column-major d x d blocks.
class PeriodicKernel {
  public:
    PeriodicKernel() = default;
    PeriodicKernel(int dim, int radius);

    static PeriodicKernel identity(int dim);
    static PeriodicKernel from_hopping(const HoppingKernel& h);

    int dim() const { return dim_; }
    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    bool in_support(Cell n) const { return n.norm_inf() <= radius_; }

    const Complex* block_ptr(Cell n) const { return data_.data() + block_offset(n); }
    Complex* block_ptr(Cell n) { return data_.data() + block_offset(n); }
    Mat block(Cell n) const;  // zero matrix outside the stored support
    void set_block(Cell n, const Mat& m);
    void add_block(Cell n, const Mat& m);

    bool nonzero(Cell n) const {
        return in_support(n) && nz_[linear_index(n)];
    }
    // Recompute structural-nonzero flags; exact-zero blocks are skipped in products.
    void refresh_structure();

    PeriodicKernel truncated(int new_radius) const;
    double self_adjointness_residual() const;
    double sup_block_norm() const;
    // Max block norm over the ell-1 shell ||n||_1 = s.
    double shell_max(int s) const;

    friend PeriodicKernel operator+(const PeriodicKernel& a, const PeriodicKernel& b);
    friend PeriodicKernel operator-(const PeriodicKernel& a, const PeriodicKernel& b);
    PeriodicKernel& operator*=(Complex s);
    friend PeriodicKernel operator*(Complex s, PeriodicKernel a) { return a *= s; }

    int linear_index(Cell n) const {
        return (n.n1 + radius_) + side() * (n.n2 + radius_);
    }

    // Bound on the mass dropped by truncated compositions (0 for exact ones).
    double attached_tail() const { return attached_tail_; }
    void set_attached_tail(double t) { attached_tail_ = t; }

  private:
    int block_offset(Cell n) const { return linear_index(n) * dim_ * dim_; }

    int dim_ = 0;
    int radius_ = 0;
    std::vector<Complex> data_;
    std::vector<char> nz_;
    double attached_tail_ = 0.0;
};

// Exact kernel convolution (AB)_{0,n} = sum_p A_{0,p} B_{0,n-p}, truncated to
// ||n||_inf <= r_out (default r_A + r_B, which is exact).
PeriodicKernel compose_periodic(const PeriodicKernel& a, const PeriodicKernel& b,
                                int r_out = -1);
PeriodicKernel adjoint(const PeriodicKernel& a);

// ([A,X_j])_{0,n} = n_j A_{0,n}; periodic, same support.
PeriodicKernel commutator_position(const PeriodicKernel& a, int axis);
// ([A,S])_{0,n} = A_{0,n} S - S A_{0,n} for an internal-space matrix S.
PeriodicKernel commutator_internal(const PeriodicKernel& a, const Mat& s);
PeriodicKernel mul_internal_right(const PeriodicKernel& a, const Mat& s);
PeriodicKernel mul_internal_left(const Mat& s, const PeriodicKernel& a);

// Operator of the form A_{m,n} = periodic_{0,n-m} + g(m) correction_{0,n-m},
// with g odd in the declared axis.
struct OffsetPeriodicKernel {
    PeriodicKernel periodic;
    PeriodicKernel correction;
    int odd_axis = 1;
    std::function<double(Cell)> g;

    Mat block(Cell m, Cell n) const;
    bool correction_is_zero() const;
};

// [A, X_j S] for periodic A: blocks n_j A_{0,n-m} S - m_j S A_{0,n-m},
// stored as periodic part [A,X_j]S with correction [A,S] and g(p) = p_j.
OffsetPeriodicKernel commutator_position_spin(const PeriodicKernel& a, int axis,
                                              const Mat& s);

// Kernel invariant along one axis away from a wall: K_{m,n} = T(c, n-m) with
// c the row coordinate along `axis`. Outside [c_lo, c_hi] the slices equal the
// left/right tail kernels (exactly, since switch profiles are constant there).
class SwitchKernel {
  public:
    SwitchKernel() = default;
    SwitchKernel(int dim, int axis, int c_lo, int c_hi, int radius);

    int dim() const { return dim_; }
    int axis() const { return axis_; }
    int c_lo() const { return c_lo_; }
    int c_hi() const { return c_hi_; }
    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }

    const PeriodicKernel& tail_left() const { return tail_left_; }
    const PeriodicKernel& tail_right() const { return tail_right_; }
    void set_tails(PeriodicKernel left, PeriodicKernel right);
    bool zero_tails() const;

    Mat slice_block(int c, Cell d) const;
    Complex* slice_ptr(int c, Cell d);
    const Complex* slice_ptr_in_window(int c, Cell d) const;

    // K_{m,n} with m at coordinate c along the switch axis.
    Mat block(int c, Cell d) const;

    double sup_block_norm() const;
    // Max block norm of the slice at coordinate c (tails included).
    double slice_norm(int c) const;

    SwitchKernel& operator+=(const SwitchKernel& other);
    SwitchKernel& operator*=(Complex s);

  private:
    int dim_ = 0;
    int axis_ = 1;
    int c_lo_ = 0;
    int c_hi_ = -1;
    int radius_ = 0;
    std::vector<Complex> data_;  // [(c - c_lo) * side^2 + offset] * dim^2
    PeriodicKernel tail_left_;
    PeriodicKernel tail_right_;

    int block_offset(int c, Cell d) const {
        const int oi = (d.n1 + radius_) + side() * (d.n2 + radius_);
        return ((c - c_lo_) * side() * side() + oi) * dim_ * dim_;
    }
};

// [A, Lambda_j] for periodic A: blocks A_{0,n-m} (L(n_j) - L(m_j)), confined to
// the wall along axis j. max_halfwidth limits the stored window when >= 0.
SwitchKernel commutator_switch(const PeriodicKernel& a, const SwitchFunction& sw,
                               int max_halfwidth = -1);

// f(m_j) A for a switch-profile f and periodic A (e.g. Lambda_1 [P,S_z]):
// window covers the jump, tails are 0 and A.
SwitchKernel profile_times_periodic(const SwitchFunction& sw, const PeriodicKernel& a);

SwitchKernel compose(const PeriodicKernel& a, const SwitchKernel& b);
SwitchKernel compose(const SwitchKernel& a, const PeriodicKernel& b);
// Same-axis composition.
SwitchKernel compose_same_axis(const SwitchKernel& a, const SwitchKernel& b);
SwitchKernel adjoint(const SwitchKernel& a);
SwitchKernel mul_internal_right(const SwitchKernel& a, const Mat& s);

// Non-periodic kernel on a finite row window (products confined in both axes).
class WindowKernel {
  public:
    WindowKernel() = default;
    WindowKernel(int dim, Cell row_lo, Cell row_hi, int radius);

    int dim() const { return dim_; }
    Cell row_lo() const { return row_lo_; }
    Cell row_hi() const { return row_hi_; }
    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    bool in_rows(Cell m) const {
        return m.n1 >= row_lo_.n1 && m.n1 <= row_hi_.n1 && m.n2 >= row_lo_.n2 &&
               m.n2 <= row_hi_.n2;
    }

    Mat block(Cell m, Cell n) const;
    Complex* block_ptr(Cell m, Cell d);
    Mat diagonal_block(Cell m) const;

    // Declared decay axes (1, 2, or both) used by the trace machinery to
    // decide whether transverse tails are controlled.
    void declare_decay(bool axis1, bool axis2) { decay_axis1_ = axis1; decay_axis2_ = axis2; }
    bool decays_along(int axis) const { return axis == 1 ? decay_axis1_ : decay_axis2_; }

    double attached_tail() const { return attached_tail_; }
    void set_attached_tail(double t) { attached_tail_ = t; }

    WindowKernel& operator+=(const WindowKernel& other);
    WindowKernel& operator*=(Complex s);

  private:
    int dim_ = 0;
    Cell row_lo_{0, 0};
    Cell row_hi_{-1, -1};
    int radius_ = 0;
    std::vector<Complex> data_;
    bool decay_axis1_ = true;
    bool decay_axis2_ = true;
    double attached_tail_ = 0.0;

    int block_offset(Cell m, Cell d) const {
        const int w1 = row_hi_.n1 - row_lo_.n1 + 1;
        const int ri = (m.n1 - row_lo_.n1) + w1 * (m.n2 - row_lo_.n2);
        const int oi = (d.n1 + radius_) + side() * (d.n2 + radius_);
        return (ri * side() * side() + oi) * dim_ * dim_;
    }
};

// Cross-axis composition; both factors must have zero tails, otherwise the
// product is not window-confined.
WindowKernel compose_cross(const SwitchKernel& a, const SwitchKernel& b);
WindowKernel compose(const PeriodicKernel& a, const WindowKernel& b);
WindowKernel compose(const WindowKernel& a, const PeriodicKernel& b);
WindowKernel adjoint(const WindowKernel& a);

// Holmgren bound: max of sup-row and sup-column sums of block operator norms
// over the stored support; dominates the operator norm of the truncation.
double holmgren_norm(const PeriodicKernel& a);
double holmgren_norm(const SwitchKernel& a);
double holmgren_norm(const WindowKernel& a);

// Envelope fit of log||A_{0,n}|| against ||n||_1 shells (shells 0 and 1 are
// skipped as pre-asymptotic). Degenerate when all off-diagonal mass < 1e-15.
DecayFit decay_profile_of(const PeriodicKernel& a, int max_shell = -1);

}  // namespace spinkubo
