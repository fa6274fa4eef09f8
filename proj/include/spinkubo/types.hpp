#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace spinkubo {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

constexpr double kPi = 3.14159265358979323846;

// Lattice cell index / offset on Z^2.
struct Cell {
    int n1 = 0;
    int n2 = 0;

    friend Cell operator+(Cell a, Cell b) { return {a.n1 + b.n1, a.n2 + b.n2}; }
    friend Cell operator-(Cell a, Cell b) { return {a.n1 - b.n1, a.n2 - b.n2}; }
    friend Cell operator-(Cell a) { return {-a.n1, -a.n2}; }
    friend bool operator==(Cell a, Cell b) { return a.n1 == b.n1 && a.n2 == b.n2; }
    friend bool operator<(Cell a, Cell b) {
        return a.n2 != b.n2 ? a.n2 < b.n2 : a.n1 < b.n1;
    }

    int norm1() const { return std::abs(n1) + std::abs(n2); }
    int norm_inf() const { return std::max(std::abs(n1), std::abs(n2)); }
    int coord(int axis) const { return axis == 1 ? n1 : n2; }
};

inline double operator_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

// C += A * B on column-major d x d complex blocks. The tight loop the kernel
// convolutions run on; Eigen's dynamic-size dispatch is too slow at d=4.
inline void block_mul_add(Complex* c, const Complex* a, const Complex* b, int d) {
    for (int j = 0; j < d; ++j) {
        for (int k = 0; k < d; ++k) {
            const Complex bkj = b[k + d * j];
            if (bkj == Complex(0.0, 0.0)) continue;
            const Complex* acol = a + d * k;
            Complex* ccol = c + d * j;
            for (int i = 0; i < d; ++i) ccol[i] += acol[i] * bkj;
        }
    }
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least-squares line through (x_i, y_i).
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    const size_t n = x.size();
    if (n < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) return f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double ybar = sy / n;
    for (size_t i = 0; i < n; ++i) {
        const double fit = f.intercept + f.slope * x[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
    }
    f.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    return f;
}

}  // namespace spinkubo
