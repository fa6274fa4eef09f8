#include "spinkubo/kernel_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinkubo/errors.hpp"

namespace spinkubo {

double tail_bound(double c, double zeta, int window_radius) {
    if (zeta <= 0.0) throw std::invalid_argument("tail_bound needs zeta > 0");
    const double q = std::exp(-1.0 / zeta);
    const double s_inf = (1.0 + q) / (1.0 - q);
    // S_W = sum_{|m| <= W} e^{-|m|/zeta}, so the 2D mass factorizes per axis.
    double s_w = 1.0;
    if (window_radius > 0)
        s_w += 2.0 * q * (1.0 - std::pow(q, window_radius)) / (1.0 - q);
    const double mass = s_inf * s_inf - s_w * s_w;
    return c * std::max(0.0, mass);
}

double tail_bound(const DecayFit& fit, int window_radius) {
    if (fit.degenerate) return 0.0;
    return tail_bound(fit.certified_c > 0 ? fit.certified_c : fit.c, fit.zeta,
                      window_radius);
}

PeriodicKernel::PeriodicKernel(int dim, int radius) : dim_(dim), radius_(radius) {
    const int n = side() * side();
    data_.assign(static_cast<size_t>(n) * dim * dim, Complex(0, 0));
    nz_.assign(n, 0);
}

PeriodicKernel PeriodicKernel::identity(int dim) {
    PeriodicKernel k(dim, 0);
    k.set_block({0, 0}, Mat::Identity(dim, dim));
    return k;
}

PeriodicKernel PeriodicKernel::from_hopping(const HoppingKernel& h) {
    int r = 0;
    for (const auto& [d, m] : h.hoppings()) r = std::max(r, d.norm_inf());
    PeriodicKernel k(h.dim(), r);
    for (const auto& [d, m] : h.hoppings()) k.set_block(d, m);
    return k;
}

Mat PeriodicKernel::block(Cell n) const {
    if (!in_support(n)) return Mat::Zero(dim_, dim_);
    return Eigen::Map<const Mat>(block_ptr(n), dim_, dim_);
}

void PeriodicKernel::set_block(Cell n, const Mat& m) {
    if (!in_support(n)) throw std::out_of_range("offset outside kernel support");
    Eigen::Map<Mat>(block_ptr(n), dim_, dim_) = m;
    nz_[linear_index(n)] = m.squaredNorm() > 0 ? 1 : 0;
}

void PeriodicKernel::add_block(Cell n, const Mat& m) {
    if (!in_support(n)) throw std::out_of_range("offset outside kernel support");
    Eigen::Map<Mat>(block_ptr(n), dim_, dim_) += m;
    if (m.squaredNorm() > 0) nz_[linear_index(n)] = 1;
}

void PeriodicKernel::refresh_structure() {
    const int d2 = dim_ * dim_;
    for (size_t i = 0; i < nz_.size(); ++i) {
        bool any = false;
        const Complex* p = data_.data() + i * d2;
        for (int j = 0; j < d2 && !any; ++j) any = p[j] != Complex(0, 0);
        nz_[i] = any ? 1 : 0;
    }
}

PeriodicKernel PeriodicKernel::truncated(int new_radius) const {
    PeriodicKernel out(dim_, std::min(new_radius, radius_));
    for (int n2 = -out.radius(); n2 <= out.radius(); ++n2)
        for (int n1 = -out.radius(); n1 <= out.radius(); ++n1) {
            const Cell n{n1, n2};
            if (nonzero(n)) out.set_block(n, block(n));
        }
    return out;
}

double PeriodicKernel::self_adjointness_residual() const {
    double res = 0.0;
    for (int n2 = -radius_; n2 <= radius_; ++n2)
        for (int n1 = -radius_; n1 <= radius_; ++n1) {
            const Cell n{n1, n2};
            res = std::max(res, operator_norm(block(-n) - Mat(block(n).adjoint())));
        }
    return res;
}

double PeriodicKernel::sup_block_norm() const {
    double s = 0.0;
    for (int n2 = -radius_; n2 <= radius_; ++n2)
        for (int n1 = -radius_; n1 <= radius_; ++n1)
            if (nonzero({n1, n2})) s = std::max(s, operator_norm(block({n1, n2})));
    return s;
}

double PeriodicKernel::shell_max(int s) const {
    double m = 0.0;
    for (int n2 = -radius_; n2 <= radius_; ++n2)
        for (int n1 = -radius_; n1 <= radius_; ++n1) {
            const Cell n{n1, n2};
            if (n.norm1() == s && nonzero(n)) m = std::max(m, operator_norm(block(n)));
        }
    return m;
}

PeriodicKernel operator+(const PeriodicKernel& a, const PeriodicKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    PeriodicKernel out(a.dim(), std::max(a.radius(), b.radius()));
    for (int n2 = -out.radius(); n2 <= out.radius(); ++n2)
        for (int n1 = -out.radius(); n1 <= out.radius(); ++n1) {
            const Cell n{n1, n2};
            if ((a.in_support(n) && a.nonzero(n)) || (b.in_support(n) && b.nonzero(n)))
                out.set_block(n, a.block(n) + b.block(n));
        }
    return out;
}

PeriodicKernel operator-(const PeriodicKernel& a, const PeriodicKernel& b) {
    PeriodicKernel nb = b;
    nb *= Complex(-1, 0);
    return a + nb;
}

PeriodicKernel& PeriodicKernel::operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    if (s == Complex(0, 0)) std::fill(nz_.begin(), nz_.end(), 0);
    return *this;
}

PeriodicKernel compose_periodic(const PeriodicKernel& a, const PeriodicKernel& b,
                                int r_out) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    const int exact = a.radius() + b.radius();
    if (r_out < 0 || r_out > exact) r_out = exact;
    const int d = a.dim();
    PeriodicKernel out(d, r_out);
    // Frobenius norms bound the dropped blocks when truncating.
    auto fro = [d](const Complex* ptr) {
        double s = 0.0;
        for (int i = 0; i < d * d; ++i) s += std::norm(ptr[i]);
        return std::sqrt(s);
    };
    double dropped = 0.0;
    double a_total = 0.0, b_total = 0.0;
    for (int q2 = -b.radius(); q2 <= b.radius(); ++q2)
        for (int q1 = -b.radius(); q1 <= b.radius(); ++q1)
            if (b.nonzero({q1, q2})) b_total += fro(b.block_ptr({q1, q2}));
    for (int p2 = -a.radius(); p2 <= a.radius(); ++p2)
        for (int p1 = -a.radius(); p1 <= a.radius(); ++p1) {
            const Cell p{p1, p2};
            if (!a.nonzero(p)) continue;
            const Complex* ap = a.block_ptr(p);
            const double ap_fro = fro(ap);
            a_total += ap_fro;
            for (int q2 = -b.radius(); q2 <= b.radius(); ++q2)
                for (int q1 = -b.radius(); q1 <= b.radius(); ++q1) {
                    const Cell q{q1, q2};
                    if (!b.nonzero(q)) continue;
                    const Cell n = p + q;
                    if (n.norm_inf() > r_out) {
                        dropped += ap_fro * fro(b.block_ptr(q));
                        continue;
                    }
                    block_mul_add(out.block_ptr(n), ap, b.block_ptr(q), d);
                }
        }
    out.set_attached_tail(dropped + a.attached_tail() * (b_total + b.attached_tail()) +
                          b.attached_tail() * a_total);
    out.refresh_structure();
    return out;
}

PeriodicKernel adjoint(const PeriodicKernel& a) {
    PeriodicKernel out(a.dim(), a.radius());
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1) {
            const Cell n{n1, n2};
            if (a.nonzero(-n)) out.set_block(n, a.block(-n).adjoint());
        }
    return out;
}

PeriodicKernel commutator_position(const PeriodicKernel& a, int axis) {
    PeriodicKernel out(a.dim(), a.radius());
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1) {
            const Cell n{n1, n2};
            const int w = n.coord(axis);
            if (w != 0 && a.nonzero(n)) out.set_block(n, double(w) * a.block(n));
        }
    return out;
}

PeriodicKernel commutator_internal(const PeriodicKernel& a, const Mat& s) {
    PeriodicKernel out(a.dim(), a.radius());
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1) {
            const Cell n{n1, n2};
            if (a.nonzero(n)) {
                const Mat an = a.block(n);
                out.set_block(n, an * s - s * an);
            }
        }
    return out;
}

PeriodicKernel mul_internal_right(const PeriodicKernel& a, const Mat& s) {
    PeriodicKernel out(a.dim(), a.radius());
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1) {
            const Cell n{n1, n2};
            if (a.nonzero(n)) out.set_block(n, a.block(n) * s);
        }
    return out;
}

PeriodicKernel mul_internal_left(const Mat& s, const PeriodicKernel& a) {
    PeriodicKernel out(a.dim(), a.radius());
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1) {
            const Cell n{n1, n2};
            if (a.nonzero(n)) out.set_block(n, s * a.block(n));
        }
    return out;
}

Mat OffsetPeriodicKernel::block(Cell m, Cell n) const {
    Mat b = periodic.block(n - m);
    if (!correction_is_zero()) b += g(m) * correction.block(n - m);
    return b;
}

bool OffsetPeriodicKernel::correction_is_zero() const {
    return correction.sup_block_norm() == 0.0;
}

OffsetPeriodicKernel commutator_position_spin(const PeriodicKernel& a, int axis,
                                              const Mat& s) {
    OffsetPeriodicKernel out;
    out.periodic = mul_internal_right(commutator_position(a, axis), s);
    out.correction = commutator_internal(a, s);
    out.odd_axis = axis;
    out.g = [axis](Cell p) { return static_cast<double>(p.coord(axis)); };
    return out;
}

SwitchKernel::SwitchKernel(int dim, int axis, int c_lo, int c_hi, int radius)
    : dim_(dim), axis_(axis), c_lo_(c_lo), c_hi_(c_hi), radius_(radius),
      tail_left_(dim, 0), tail_right_(dim, 0) {
    const size_t slices = static_cast<size_t>(std::max(0, c_hi - c_lo + 1));
    data_.assign(slices * side() * side() * dim * dim, Complex(0, 0));
}

void SwitchKernel::set_tails(PeriodicKernel left, PeriodicKernel right) {
    tail_left_ = std::move(left);
    tail_right_ = std::move(right);
}

bool SwitchKernel::zero_tails() const {
    return tail_left_.sup_block_norm() == 0.0 && tail_right_.sup_block_norm() == 0.0;
}

Mat SwitchKernel::slice_block(int c, Cell d) const {
    if (c < c_lo_) return tail_left_.block(d);
    if (c > c_hi_) return tail_right_.block(d);
    if (d.norm_inf() > radius_) return Mat::Zero(dim_, dim_);
    return Eigen::Map<const Mat>(data_.data() + block_offset(c, d), dim_, dim_);
}

Complex* SwitchKernel::slice_ptr(int c, Cell d) {
    return data_.data() + block_offset(c, d);
}

const Complex* SwitchKernel::slice_ptr_in_window(int c, Cell d) const {
    return data_.data() + block_offset(c, d);
}

Mat SwitchKernel::block(int c, Cell d) const { return slice_block(c, d); }

double SwitchKernel::sup_block_norm() const {
    double s = std::max(tail_left_.sup_block_norm(), tail_right_.sup_block_norm());
    for (int c = c_lo_; c <= c_hi_; ++c) s = std::max(s, slice_norm(c));
    return s;
}

double SwitchKernel::slice_norm(int c) const {
    double s = 0.0;
    for (int d2 = -radius_; d2 <= radius_; ++d2)
        for (int d1 = -radius_; d1 <= radius_; ++d1)
            s = std::max(s, operator_norm(slice_block(c, {d1, d2})));
    return s;
}

SwitchKernel& SwitchKernel::operator+=(const SwitchKernel& other) {
    if (dim_ != other.dim_ || axis_ != other.axis_)
        throw std::invalid_argument("switch kernel mismatch");
    SwitchKernel out(dim_, axis_, std::min(c_lo_, other.c_lo_),
                     std::max(c_hi_, other.c_hi_), std::max(radius_, other.radius_));
    for (int c = out.c_lo_; c <= out.c_hi_; ++c)
        for (int d2 = -out.radius_; d2 <= out.radius_; ++d2)
            for (int d1 = -out.radius_; d1 <= out.radius_; ++d1) {
                const Cell d{d1, d2};
                Mat m = slice_block(c, d) + other.slice_block(c, d);
                if (m.squaredNorm() > 0)
                    Eigen::Map<Mat>(out.slice_ptr(c, d), dim_, dim_) = m;
            }
    out.set_tails(tail_left_ + other.tail_left_, tail_right_ + other.tail_right_);
    *this = std::move(out);
    return *this;
}

SwitchKernel& SwitchKernel::operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    tail_left_ *= s;
    tail_right_ *= s;
    return *this;
}

SwitchKernel commutator_switch(const PeriodicKernel& a, const SwitchFunction& sw,
                               int max_halfwidth) {
    const int r = a.radius();
    const int lo = sw.jump_lo() - r;
    const int hi = sw.jump_hi() - 1 + r;
    if (max_halfwidth >= 0 && (hi - lo + 1) / 2 > max_halfwidth)
        throw WindowTooSmall("switch commutator window exceeds requested half-width " +
                             std::to_string(max_halfwidth));
    SwitchKernel out(a.dim(), sw.axis(), lo, hi, r);
    for (int c = lo; c <= hi; ++c)
        for (int d2 = -r; d2 <= r; ++d2)
            for (int d1 = -r; d1 <= r; ++d1) {
                const Cell d{d1, d2};
                if (!a.nonzero(d)) continue;
                const double w = sw(c + d.coord(sw.axis())) - sw(c);
                if (w == 0.0) continue;
                Eigen::Map<Mat>(out.slice_ptr(c, d), a.dim(), a.dim()) =
                    w * a.block(d);
            }
    return out;  // zero tails: the profile is constant beyond the window
}

SwitchKernel profile_times_periodic(const SwitchFunction& sw, const PeriodicKernel& a) {
    const int lo = sw.jump_lo();
    const int hi = sw.jump_hi() - 1;
    SwitchKernel out(a.dim(), sw.axis(), lo, hi, a.radius());
    for (int c = lo; c <= hi; ++c) {
        const double w = sw(c);
        if (w == 0.0) continue;
        for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
            for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                const Cell d{d1, d2};
                if (!a.nonzero(d)) continue;
                Eigen::Map<Mat>(out.slice_ptr(c, d), a.dim(), a.dim()) =
                    w * a.block(d);
            }
    }
    out.set_tails(PeriodicKernel(a.dim(), 0), a);
    return out;
}

SwitchKernel compose(const PeriodicKernel& a, const SwitchKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    const int d = a.dim();
    const int axis = b.axis();
    const int lo = b.c_lo() - a.radius();
    const int hi = b.c_hi() + a.radius();
    SwitchKernel out(d, axis, lo, hi, a.radius() + b.radius());
    for (int c = lo; c <= hi; ++c) {
        for (int u2 = -a.radius(); u2 <= a.radius(); ++u2)
            for (int u1 = -a.radius(); u1 <= a.radius(); ++u1) {
                const Cell u{u1, u2};
                if (!a.nonzero(u)) continue;
                const Complex* ap = a.block_ptr(u);
                const int cs = c + u.coord(axis);
                // source slice: window data or a tail
                const PeriodicKernel* tail = nullptr;
                if (cs < b.c_lo())
                    tail = &b.tail_left();
                else if (cs > b.c_hi())
                    tail = &b.tail_right();
                if (tail) {
                    for (int e2 = -tail->radius(); e2 <= tail->radius(); ++e2)
                        for (int e1 = -tail->radius(); e1 <= tail->radius(); ++e1) {
                            const Cell e{e1, e2};
                            if (!tail->nonzero(e)) continue;
                            block_mul_add(out.slice_ptr(c, u + e), ap,
                                          tail->block_ptr(e), d);
                        }
                } else {
                    for (int e2 = -b.radius(); e2 <= b.radius(); ++e2)
                        for (int e1 = -b.radius(); e1 <= b.radius(); ++e1) {
                            const Cell e{e1, e2};
                            block_mul_add(out.slice_ptr(c, u + e), ap,
                                          b.slice_ptr_in_window(cs, e), d);
                        }
                }
            }
    }
    out.set_tails(compose_periodic(a, b.tail_left()), compose_periodic(a, b.tail_right()));
    return out;
}

SwitchKernel compose(const SwitchKernel& a, const PeriodicKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    const int d = a.dim();
    SwitchKernel out(d, a.axis(), a.c_lo(), a.c_hi(), a.radius() + b.radius());
    for (int c = a.c_lo(); c <= a.c_hi(); ++c)
        for (int e2 = -a.radius(); e2 <= a.radius(); ++e2)
            for (int e1 = -a.radius(); e1 <= a.radius(); ++e1) {
                const Cell e{e1, e2};
                const Complex* ap = a.slice_ptr_in_window(c, e);
                bool any = false;
                for (int i = 0; i < d * d && !any; ++i) any = ap[i] != Complex(0, 0);
                if (!any) continue;
                for (int u2 = -b.radius(); u2 <= b.radius(); ++u2)
                    for (int u1 = -b.radius(); u1 <= b.radius(); ++u1) {
                        const Cell u{u1, u2};
                        if (!b.nonzero(u)) continue;
                        block_mul_add(out.slice_ptr(c, e + u), ap, b.block_ptr(u), d);
                    }
            }
    out.set_tails(compose_periodic(a.tail_left(), b), compose_periodic(a.tail_right(), b));
    return out;
}

SwitchKernel compose_same_axis(const SwitchKernel& a, const SwitchKernel& b) {
    if (a.dim() != b.dim() || a.axis() != b.axis())
        throw std::invalid_argument("switch kernel mismatch");
    const int d = a.dim();
    const int axis = a.axis();
    const int lo = std::min(a.c_lo(), b.c_lo() - a.radius());
    const int hi = std::max(a.c_hi(), b.c_hi() + a.radius());
    SwitchKernel out(d, axis, lo, hi, a.radius() + b.radius());
    std::vector<Complex> scratch(static_cast<size_t>(d) * d);
    for (int c = lo; c <= hi; ++c)
        for (int u2 = -a.radius(); u2 <= a.radius(); ++u2)
            for (int u1 = -a.radius(); u1 <= a.radius(); ++u1) {
                const Cell u{u1, u2};
                Mat au = a.slice_block(c, u);
                if (au.squaredNorm() == 0) continue;
                Eigen::Map<Mat>(scratch.data(), d, d) = au;
                const int cs = c + u.coord(axis);
                for (int e2 = -b.radius(); e2 <= b.radius(); ++e2)
                    for (int e1 = -b.radius(); e1 <= b.radius(); ++e1) {
                        const Cell e{e1, e2};
                        Mat be = b.slice_block(cs, e);
                        if (be.squaredNorm() == 0) continue;
                        Mat prod = Eigen::Map<const Mat>(scratch.data(), d, d) * be;
                        Eigen::Map<Mat>(out.slice_ptr(c, u + e), d, d) += prod;
                    }
            }
    out.set_tails(compose_periodic(a.tail_left(), b.tail_left()),
                  compose_periodic(a.tail_right(), b.tail_right()));
    return out;
}

SwitchKernel adjoint(const SwitchKernel& a) {
    const int d = a.dim();
    SwitchKernel out(d, a.axis(), a.c_lo() - a.radius(), a.c_hi() + a.radius(),
                     a.radius());
    for (int c = out.c_lo(); c <= out.c_hi(); ++c)
        for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
            for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                const Cell off{d1, d2};
                Mat src = a.slice_block(c + off.coord(a.axis()), -off);
                if (src.squaredNorm() == 0) continue;
                Eigen::Map<Mat>(out.slice_ptr(c, off), d, d) = src.adjoint();
            }
    out.set_tails(adjoint(a.tail_left()), adjoint(a.tail_right()));
    return out;
}

SwitchKernel mul_internal_right(const SwitchKernel& a, const Mat& s) {
    SwitchKernel out(a.dim(), a.axis(), a.c_lo(), a.c_hi(), a.radius());
    const int d = a.dim();
    for (int c = a.c_lo(); c <= a.c_hi(); ++c)
        for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
            for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                const Cell off{d1, d2};
                Mat m = a.slice_block(c, off);
                if (m.squaredNorm() == 0) continue;
                Eigen::Map<Mat>(out.slice_ptr(c, off), d, d) = m * s;
            }
    out.set_tails(mul_internal_right(a.tail_left(), s),
                  mul_internal_right(a.tail_right(), s));
    return out;
}

WindowKernel::WindowKernel(int dim, Cell row_lo, Cell row_hi, int radius)
    : dim_(dim), row_lo_(row_lo), row_hi_(row_hi), radius_(radius) {
    const long w1 = row_hi.n1 - row_lo.n1 + 1;
    const long w2 = row_hi.n2 - row_lo.n2 + 1;
    if (w1 <= 0 || w2 <= 0) throw std::invalid_argument("empty window");
    data_.assign(static_cast<size_t>(w1) * w2 * side() * side() * dim * dim,
                 Complex(0, 0));
}

Mat WindowKernel::block(Cell m, Cell n) const {
    const Cell d = n - m;
    if (!in_rows(m) || d.norm_inf() > radius_) return Mat::Zero(dim_, dim_);
    return Eigen::Map<const Mat>(data_.data() + block_offset(m, d), dim_, dim_);
}

Complex* WindowKernel::block_ptr(Cell m, Cell d) {
    return data_.data() + block_offset(m, d);
}

Mat WindowKernel::diagonal_block(Cell m) const { return block(m, m); }

WindowKernel& WindowKernel::operator+=(const WindowKernel& other) {
    WindowKernel out(dim_,
                     {std::min(row_lo_.n1, other.row_lo_.n1),
                      std::min(row_lo_.n2, other.row_lo_.n2)},
                     {std::max(row_hi_.n1, other.row_hi_.n1),
                      std::max(row_hi_.n2, other.row_hi_.n2)},
                     std::max(radius_, other.radius_));
    for (int m2 = out.row_lo_.n2; m2 <= out.row_hi_.n2; ++m2)
        for (int m1 = out.row_lo_.n1; m1 <= out.row_hi_.n1; ++m1) {
            const Cell m{m1, m2};
            for (int d2 = -out.radius_; d2 <= out.radius_; ++d2)
                for (int d1 = -out.radius_; d1 <= out.radius_; ++d1) {
                    const Cell d{d1, d2};
                    Mat v = block(m, m + d) + other.block(m, m + d);
                    if (v.squaredNorm() > 0)
                        Eigen::Map<Mat>(out.block_ptr(m, d), dim_, dim_) = v;
                }
        }
    out.declare_decay(decay_axis1_ && other.decay_axis1_,
                      decay_axis2_ && other.decay_axis2_);
    out.set_attached_tail(attached_tail_ + other.attached_tail_);
    *this = std::move(out);
    return *this;
}

WindowKernel& WindowKernel::operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    attached_tail_ *= std::abs(s);
    return *this;
}

WindowKernel compose_cross(const SwitchKernel& a, const SwitchKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    if (a.axis() == b.axis())
        throw std::invalid_argument("compose_cross needs distinct axes");
    if (!a.zero_tails() || !b.zero_tails())
        throw TailNotControlled("cross composition of switch kernels with tails");
    const int d = a.dim();
    const int ja = a.axis();
    // Rows: coordinate along a's axis inside a's window; along b's axis within
    // b's window dilated by a's radius.
    Cell lo, hi;
    if (ja == 1) {
        lo = {a.c_lo(), b.c_lo() - a.radius()};
        hi = {a.c_hi(), b.c_hi() + a.radius()};
    } else {
        lo = {b.c_lo() - a.radius(), a.c_lo()};
        hi = {b.c_hi() + a.radius(), a.c_hi()};
    }
    WindowKernel out(d, lo, hi, a.radius() + b.radius());
    for (int m2 = lo.n2; m2 <= hi.n2; ++m2)
        for (int m1 = lo.n1; m1 <= hi.n1; ++m1) {
            const Cell m{m1, m2};
            const int ca = m.coord(a.axis());
            for (int u2 = -a.radius(); u2 <= a.radius(); ++u2)
                for (int u1 = -a.radius(); u1 <= a.radius(); ++u1) {
                    const Cell u{u1, u2};
                    Mat au = a.slice_block(ca, u);
                    if (au.squaredNorm() == 0) continue;
                    const int cb = (m + u).coord(b.axis());
                    for (int e2 = -b.radius(); e2 <= b.radius(); ++e2)
                        for (int e1 = -b.radius(); e1 <= b.radius(); ++e1) {
                            const Cell e{e1, e2};
                            Mat be = b.slice_block(cb, e);
                            if (be.squaredNorm() == 0) continue;
                            Mat prod = au * be;
                            Eigen::Map<Mat>(out.block_ptr(m, u + e), d, d) += prod;
                        }
                }
        }
    return out;
}

WindowKernel compose(const PeriodicKernel& a, const WindowKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    const int d = a.dim();
    const Cell lo = {b.row_lo().n1 - a.radius(), b.row_lo().n2 - a.radius()};
    const Cell hi = {b.row_hi().n1 + a.radius(), b.row_hi().n2 + a.radius()};
    WindowKernel out(d, lo, hi, a.radius() + b.radius());
    for (int m2 = lo.n2; m2 <= hi.n2; ++m2)
        for (int m1 = lo.n1; m1 <= hi.n1; ++m1) {
            const Cell m{m1, m2};
            for (int u2 = -a.radius(); u2 <= a.radius(); ++u2)
                for (int u1 = -a.radius(); u1 <= a.radius(); ++u1) {
                    const Cell u{u1, u2};
                    if (!a.nonzero(u) || !b.in_rows(m + u)) continue;
                    for (int e2 = -b.radius(); e2 <= b.radius(); ++e2)
                        for (int e1 = -b.radius(); e1 <= b.radius(); ++e1) {
                            const Cell e{e1, e2};
                            Mat be = b.block(m + u, m + u + e);
                            if (be.squaredNorm() == 0) continue;
                            Mat av = a.block(u);
                            Mat prod = av * be;
                            Eigen::Map<Mat>(out.block_ptr(m, u + e), d, d) += prod;
                        }
                }
        }
    out.declare_decay(b.decays_along(1), b.decays_along(2));
    out.set_attached_tail(b.attached_tail() * holmgren_norm(a));
    return out;
}

WindowKernel compose(const WindowKernel& a, const PeriodicKernel& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dim mismatch");
    const int d = a.dim();
    WindowKernel out(d, a.row_lo(), a.row_hi(), a.radius() + b.radius());
    for (int m2 = a.row_lo().n2; m2 <= a.row_hi().n2; ++m2)
        for (int m1 = a.row_lo().n1; m1 <= a.row_hi().n1; ++m1) {
            const Cell m{m1, m2};
            for (int e2 = -a.radius(); e2 <= a.radius(); ++e2)
                for (int e1 = -a.radius(); e1 <= a.radius(); ++e1) {
                    const Cell e{e1, e2};
                    Mat ae = a.block(m, m + e);
                    if (ae.squaredNorm() == 0) continue;
                    for (int u2 = -b.radius(); u2 <= b.radius(); ++u2)
                        for (int u1 = -b.radius(); u1 <= b.radius(); ++u1) {
                            const Cell u{u1, u2};
                            if (!b.nonzero(u)) continue;
                            Mat prod = ae * b.block(u);
                            Eigen::Map<Mat>(out.block_ptr(m, e + u), d, d) += prod;
                        }
                }
        }
    out.declare_decay(a.decays_along(1), a.decays_along(2));
    out.set_attached_tail(a.attached_tail() * holmgren_norm(b));
    return out;
}

WindowKernel adjoint(const WindowKernel& a) {
    const int d = a.dim();
    const Cell lo = {a.row_lo().n1 - a.radius(), a.row_lo().n2 - a.radius()};
    const Cell hi = {a.row_hi().n1 + a.radius(), a.row_hi().n2 + a.radius()};
    WindowKernel out(d, lo, hi, a.radius());
    for (int m2 = lo.n2; m2 <= hi.n2; ++m2)
        for (int m1 = lo.n1; m1 <= hi.n1; ++m1) {
            const Cell m{m1, m2};
            for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
                for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                    const Cell off{d1, d2};
                    Mat src = a.block(m + off, m);
                    if (src.squaredNorm() == 0) continue;
                    Eigen::Map<Mat>(out.block_ptr(m, off), d, d) = src.adjoint();
                }
        }
    out.declare_decay(a.decays_along(1), a.decays_along(2));
    out.set_attached_tail(a.attached_tail());
    return out;
}

double holmgren_norm(const PeriodicKernel& a) {
    // Rows are translates of each other, and the column sum equals the row sum.
    double s = 0.0;
    for (int n2 = -a.radius(); n2 <= a.radius(); ++n2)
        for (int n1 = -a.radius(); n1 <= a.radius(); ++n1)
            if (a.nonzero({n1, n2})) s += operator_norm(a.block({n1, n2}));
    return s;
}

double holmgren_norm(const SwitchKernel& a) {
    double best = 0.0;
    // Row sums over the window and one representative row per tail.
    for (int c = a.c_lo() - 1; c <= a.c_hi() + 1; ++c) {
        double s = 0.0;
        for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
            for (int d1 = -a.radius(); d1 <= a.radius(); ++d1)
                s += operator_norm(a.slice_block(c, {d1, d2}));
        best = std::max(best, s);
    }
    // Column sums: column at coordinate c receives slice (c - d_j, d).
    for (int c = a.c_lo() - a.radius() - 1; c <= a.c_hi() + a.radius() + 1; ++c) {
        double s = 0.0;
        for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
            for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                const Cell d{d1, d2};
                s += operator_norm(a.slice_block(c - d.coord(a.axis()), d));
            }
        best = std::max(best, s);
    }
    best = std::max(best, holmgren_norm(a.tail_left()));
    best = std::max(best, holmgren_norm(a.tail_right()));
    return best;
}

double holmgren_norm(const WindowKernel& a) {
    double best = 0.0;
    std::map<Cell, double> colsum;
    for (int m2 = a.row_lo().n2; m2 <= a.row_hi().n2; ++m2)
        for (int m1 = a.row_lo().n1; m1 <= a.row_hi().n1; ++m1) {
            const Cell m{m1, m2};
            double s = 0.0;
            for (int d2 = -a.radius(); d2 <= a.radius(); ++d2)
                for (int d1 = -a.radius(); d1 <= a.radius(); ++d1) {
                    const Cell d{d1, d2};
                    const double nb = operator_norm(a.block(m, m + d));
                    if (nb > 0) {
                        s += nb;
                        colsum[m + d] += nb;
                    }
                }
            best = std::max(best, s);
        }
    for (const auto& [n, s] : colsum) best = std::max(best, s);
    return best;
}

DecayFit decay_profile_of(const PeriodicKernel& a, int max_shell) {
    DecayFit fit;
    if (max_shell < 0) max_shell = a.radius();
    double offdiag = 0.0;
    for (int s = 1; s <= 2 * a.radius(); ++s) offdiag = std::max(offdiag, a.shell_max(s));
    if (offdiag < 1e-15) {
        fit.degenerate = true;
        return fit;
    }
    std::vector<double> xs, ys;
    for (int s = 2; s <= max_shell; ++s) {
        const double m = a.shell_max(s);
        if (m > 0) {
            xs.push_back(s);
            ys.push_back(std::log(m));
        }
    }
    if (xs.size() < 2) {
        fit.degenerate = true;
        return fit;
    }
    const LinearFit lf = fit_line(xs, ys);
    fit.zeta = lf.slope < 0 ? -1.0 / lf.slope : 0.0;
    fit.c = std::exp(lf.intercept);
    fit.r_squared = lf.r_squared;
    if (fit.zeta <= 0) {
        fit.degenerate = true;
        return fit;
    }
    // Raise C until the envelope dominates every stored shell, shell 0 and 1
    // included, so tail bounds certified against the data.
    double c_cert = fit.c;
    for (int s = 0; s <= 2 * a.radius(); ++s) {
        const double m = a.shell_max(s);
        if (m > 0) c_cert = std::max(c_cert, m * std::exp(double(s) / fit.zeta));
    }
    fit.certified_c = c_cert;
    return fit;
}

}  // namespace spinkubo
