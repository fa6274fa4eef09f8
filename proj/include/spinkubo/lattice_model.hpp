#pragma once

#include <functional>
#include <map>
#include <string>

#include "spinkubo/types.hpp"

namespace spinkubo {

// Kane-Mele couplings. Lattice spacing is fixed to 1; energies are in units
// of |t| whenever t != 0. Signs are meaningful, no positivity constraints.
struct KaneMeleParams {
    double t = 0.0;
    double lambda_v = 0.0;
    double lambda_so = 0.0;
    double lambda_r = 0.0;
};

// Internal space C^N (orbitals) tensor C^2 (spin). Canonical ordering for the
// honeycomb case N=2: (A up, A down, B up, B down); index = 2*orbital + spin.
struct InternalBasis {
    int n_orbitals = 2;

    int dim() const { return 2 * n_orbitals; }
    int index(int orbital, int spin) const { return 2 * orbital + spin; }
};

// S_z = Id (x) (1/2) s_z on the internal space.
Mat spin_z_matrix(const InternalBasis& basis);
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();

// Finite-range periodic Hamiltonian on Z^2, stored as a map from cell offsets
// d to internal-space matrices H_{0,d}; the full operator is H_{m,n} = H_{0,n-m}.
// Finite support makes the operator near-sighted for every range.
class HoppingKernel {
  public:
    explicit HoppingKernel(InternalBasis basis) : basis_(basis) {}

    const InternalBasis& basis() const { return basis_; }
    int dim() const { return basis_.dim(); }

    // Adds m to H_{0,d}. Callers are responsible for also adding the
    // hermitian partner at -d; validate() checks they did.
    void add(Cell d, const Mat& m);

    const std::map<Cell, Mat>& hoppings() const { return hoppings_; }
    Mat block(Cell d) const;
    bool empty() const { return hoppings_.empty(); }

    // Max ell-1 offset norm over the support.
    int range() const;

    // Max over offsets of ||H_{0,-d} - H_{0,d}^dagger||.
    double hermiticity_residual() const;
    void validate(double tol = 1e-12) const;

    // Drops blocks with norm below eps (zero couplings leave no support).
    void prune(double eps = 0.0);

  private:
    InternalBasis basis_;
    std::map<Cell, Mat> hoppings_;
};

// Kane-Mele Hamiltonian mapped to Z^2 offsets through the canonical
// dimerization: cell n holds A at n1*a1 + n2*a2 and B = A + d1, with
// a1 = d2 - d3, a2 = d3 - d1. Range <= 2 in ell-1 norm.
HoppingKernel build_kane_mele(const KaneMeleParams& params);

// Bloch fiber H(k) = sum_d e^{i k.d} H_{0,d}, k in [0,2pi)^2.
Mat bloch_fiber(const HoppingKernel& kernel, double k1, double k2);

// Residual of Theta H Theta^{-1} = H for Theta = e^{i pi s_y / 2} K:
// max over offsets of the transformed-minus-original block norm.
double verify_time_reversal(const HoppingKernel& kernel);

// Switch function along one axis: profile 0 below the jump window [n-, n+),
// 1 at and above n+. Satisfies sum_m (L(m+n) - L(m)) = n for every n.
class SwitchFunction {
  public:
    SwitchFunction(int axis, int n_minus, int n_plus,
                   std::function<double(int)> profile, std::string name);

    // Step at the origin: 0 for n <= 0, 1 for n >= 1. Jump window [0,1).
    static SwitchFunction sharp(int axis);
    // Linear ramp over [-5,6).
    static SwitchFunction linear_ramp(int axis);
    // Ramp family Xi^(l): 0 below -l/2, slope 1/l across, 1 at l/2 and above.
    static SwitchFunction xi_ramp(int axis, int l);
    // Any profile shifted by s cells.
    SwitchFunction shifted(int s) const;

    int axis() const { return axis_; }
    int jump_lo() const { return n_minus_; }
    int jump_hi() const { return n_plus_; }
    const std::string& name() const { return name_; }
    double operator()(int n) const;

  private:
    int axis_;
    int n_minus_;
    int n_plus_;
    std::function<double(int)> profile_;
    std::string name_;
};

// Approximate position X_1^(l) = l (Xi^(l) - 1/2), i.e. n clamped to [-l/2, l/2].
double approximate_position(int l, int n);

}  // namespace spinkubo
