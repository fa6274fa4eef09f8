#include "spinkubo/lattice_model.hpp"

#include <cmath>
#include <stdexcept>

#include "spinkubo/errors.hpp"

namespace spinkubo {

Mat pauli_x() {
    Mat s(2, 2);
    s << 0, 1, 1, 0;
    return s;
}

Mat pauli_y() {
    Mat s(2, 2);
    s << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return s;
}

Mat pauli_z() {
    Mat s(2, 2);
    s << 1, 0, 0, -1;
    return s;
}

Mat spin_z_matrix(const InternalBasis& basis) {
    Mat sz = Mat::Zero(basis.dim(), basis.dim());
    for (int o = 0; o < basis.n_orbitals; ++o) {
        sz(basis.index(o, 0), basis.index(o, 0)) = 0.5;
        sz(basis.index(o, 1), basis.index(o, 1)) = -0.5;
    }
    return sz;
}

void HoppingKernel::add(Cell d, const Mat& m) {
    if (m.rows() != dim() || m.cols() != dim())
        throw std::invalid_argument("hopping block has wrong internal dimension");
    auto it = hoppings_.find(d);
    if (it == hoppings_.end())
        hoppings_.emplace(d, m);
    else
        it->second += m;
}

Mat HoppingKernel::block(Cell d) const {
    auto it = hoppings_.find(d);
    if (it == hoppings_.end()) return Mat::Zero(dim(), dim());
    return it->second;
}

int HoppingKernel::range() const {
    int r = 0;
    for (const auto& [d, m] : hoppings_)
        if (m.norm() > 0) r = std::max(r, d.norm1());
    return r;
}

double HoppingKernel::hermiticity_residual() const {
    double res = 0.0;
    for (const auto& [d, m] : hoppings_)
        res = std::max(res, operator_norm(block(-d) - Mat(m.adjoint())));
    return res;
}

void HoppingKernel::validate(double tol) const {
    const double res = hermiticity_residual();
    if (res > tol)
        throw std::invalid_argument("hopping kernel is not hermitian, residual " +
                                    std::to_string(res));
}

void HoppingKernel::prune(double eps) {
    for (auto it = hoppings_.begin(); it != hoppings_.end();) {
        if (it->second.norm() <= eps)
            it = hoppings_.erase(it);
        else
            ++it;
    }
}

namespace {

// Internal 2x2 orbital structure for N=2, tensored with a spin matrix.
// sub(A,B) selects the orbital transfer; spin is a 2x2 matrix.
Mat orbital_spin(const InternalBasis& basis, int orb_row, int orb_col, const Mat& spin) {
    Mat m = Mat::Zero(basis.dim(), basis.dim());
    for (int s = 0; s < 2; ++s)
        for (int r = 0; r < 2; ++r)
            m(basis.index(orb_row, s), basis.index(orb_col, r)) = spin(s, r);
    return m;
}

}  // namespace

HoppingKernel build_kane_mele(const KaneMeleParams& p) {
    const InternalBasis basis{2};
    HoppingKernel kernel(basis);
    const Mat id2 = Mat::Identity(2, 2);
    const Mat sx = pauli_x(), sy = pauli_y(), sz = pauli_z();
    const Complex iu(0, 1);

    // Nearest-neighbor hopping. Under B = A + d1 the three bonds from an A
    // site land on B sites of cells d in {(0,0),(1,1),(0,1)}.
    const Cell nn_offsets[3] = {{0, 0}, {1, 1}, {0, 1}};
    if (p.t != 0.0) {
        for (Cell d : nn_offsets) {
            kernel.add(d, p.t * orbital_spin(basis, 0, 1, id2));
            kernel.add(-d, p.t * orbital_spin(basis, 1, 0, id2));
        }
    }

    // Sublattice potential (chi_A - chi_B) (x) Id.
    if (p.lambda_v != 0.0) {
        Mat hv = Mat::Zero(basis.dim(), basis.dim());
        for (int s = 0; s < 2; ++s) {
            hv(basis.index(0, s), basis.index(0, s)) = 1.0;
            hv(basis.index(1, s), basis.index(1, s)) = -1.0;
        }
        kernel.add({0, 0}, p.lambda_v * hv);
    }

    // Spin-orbit term -i (chi_A - chi_B) sum_i (T_{a_i} - T_{-a_i}) (x) s_z.
    // Bravais vectors in cell coordinates: a1 = (1,0), a2 = (0,1), a3 = -a1-a2.
    const Cell bravais[3] = {{1, 0}, {0, 1}, {-1, -1}};
    if (p.lambda_so != 0.0) {
        Mat so_a = orbital_spin(basis, 0, 0, sz);   // chi_A part
        Mat so_b = orbital_spin(basis, 1, 1, sz);   // chi_B part
        for (Cell c : bravais) {
            kernel.add(c, p.lambda_so * iu * (so_a - so_b));
            kernel.add(-c, -p.lambda_so * iu * (so_a - so_b));
        }
    }

    // Rashba term: i (T_{d_i} - T_{-d_i}) (x) M_i with
    // M1 = -(sqrt3 s_x + s_y)/2, M2 = (sqrt3 s_x - s_y)/2, M3 = s_y.
    // T_{d_i} transfers A -> B; the cell offsets follow the dimerization.
    if (p.lambda_r != 0.0) {
        const double rt3 = std::sqrt(3.0);
        const Mat m1 = -(rt3 * sx + sy) / 2.0;
        const Mat m2 = (rt3 * sx - sy) / 2.0;
        const Mat m3 = sy;
        struct Bond {
            Cell ba_offset;  // offset carrying the B<-A entry
            const Mat* m;
        };
        const Bond bonds[3] = {{{0, 0}, &m1}, {{-1, -1}, &m2}, {{0, -1}, &m3}};
        for (const Bond& b : bonds) {
            kernel.add(b.ba_offset, p.lambda_r * iu * orbital_spin(basis, 1, 0, *b.m));
            kernel.add(-b.ba_offset, -p.lambda_r * iu * orbital_spin(basis, 0, 1, *b.m));
        }
    }

    kernel.prune();
    kernel.validate();
    return kernel;
}

Mat bloch_fiber(const HoppingKernel& kernel, double k1, double k2) {
    Mat h = Mat::Zero(kernel.dim(), kernel.dim());
    for (const auto& [d, m] : kernel.hoppings())
        h += std::exp(Complex(0, k1 * d.n1 + k2 * d.n2)) * m;
    return h;
}

double verify_time_reversal(const HoppingKernel& kernel) {
    const InternalBasis& basis = kernel.basis();
    const int d = basis.dim();
    // U = Id_orbitals (x) i s_y; Theta A Theta^{-1} has kernel U conj(A_{0,n}) U^dag.
    Mat u = Mat::Zero(d, d);
    for (int o = 0; o < basis.n_orbitals; ++o) {
        u(basis.index(o, 0), basis.index(o, 1)) = 1.0;
        u(basis.index(o, 1), basis.index(o, 0)) = -1.0;
    }
    double res = 0.0;
    for (const auto& [off, m] : kernel.hoppings()) {
        Mat transformed = u * m.conjugate() * u.adjoint();
        res = std::max(res, operator_norm(transformed - m));
    }
    return res;
}

SwitchFunction::SwitchFunction(int axis, int n_minus, int n_plus,
                               std::function<double(int)> profile, std::string name)
    : axis_(axis), n_minus_(n_minus), n_plus_(n_plus),
      profile_(std::move(profile)), name_(std::move(name)) {
    if (axis != 1 && axis != 2) throw std::invalid_argument("switch axis must be 1 or 2");
    if (n_minus >= n_plus) throw std::invalid_argument("switch jump window empty");
}

double SwitchFunction::operator()(int n) const {
    if (n < n_minus_) return 0.0;
    if (n >= n_plus_) return 1.0;
    return profile_(n);
}

SwitchFunction SwitchFunction::sharp(int axis) {
    return SwitchFunction(axis, 0, 1, [](int) { return 0.0; }, "sharp0");
}

SwitchFunction SwitchFunction::linear_ramp(int axis) {
    return SwitchFunction(
        axis, -5, 6, [](int n) { return (n + 5) / 11.0; }, "ramp[-5,6)");
}

SwitchFunction SwitchFunction::xi_ramp(int axis, int l) {
    if (l <= 0) throw std::invalid_argument("xi ramp needs l > 0");
    // Xi^(l)(n) = clamp(n/l + 1/2, 0, 1); jump window is [-ceil(l/2), ceil(l/2)+1).
    const int half = (l + 1) / 2;
    return SwitchFunction(
        axis, -half, half + 1,
        [l](int n) {
            double v = static_cast<double>(n) / l + 0.5;
            return std::min(1.0, std::max(0.0, v));
        },
        "xi" + std::to_string(l));
}

SwitchFunction SwitchFunction::shifted(int s) const {
    auto prof = profile_;
    return SwitchFunction(
        axis_, n_minus_ + s, n_plus_ + s, [prof, s](int n) { return prof(n - s); },
        name_ + "+" + std::to_string(s));
}

double approximate_position(int l, int n) {
    const double half = l / 2.0;
    if (n < -half) return -half;
    if (n >= half) return half;
    return n;
}

}  // namespace spinkubo
