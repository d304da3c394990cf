#pragma once

// Shared instances and small independent reference computations for tests.
// Nothing here calls into the library's solvers.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "spikeopt/problem.hpp"

namespace fixtures {

using spikeopt::DenseMatrix;
using spikeopt::ProblemInstance;
using spikeopt::Vector;

/// Two-dimensional instance with columns (1,0), (0,1), (2/3,2/3) and b = (0.1, 0.4).
inline ProblemInstance triangle_instance() {
    return ProblemInstance(DenseMatrix::from_rows({{1.0, 0.0, 2.0 / 3.0}, {0.0, 1.0, 2.0 / 3.0}}),
                           Vector{0.1, 0.4});
}
inline const Vector triangle_x_opt{0.0, 0.3, 0.15};
inline const Vector triangle_v_opt{0.5, 1.0};
inline constexpr double triangle_opt = 0.45;

/// Two columns (0,-1) and (1/sqrt2, -1/sqrt2) with b = (1, 0).
inline ProblemInstance wedge_instance() {
    const double h = 1.0 / std::sqrt(2.0);
    return ProblemInstance(DenseMatrix::from_rows({{0.0, h}, {-1.0, -h}}), Vector{1.0, 0.0});
}

/// Independent Gaussian matrix with unit columns (test-side generator).
inline DenseMatrix unit_column_gaussian(std::size_t m, std::size_t n, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    DenseMatrix a(m, n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            a(i, j) = nd(gen);
            s += a(i, j) * a(i, j);
        }
        s = std::sqrt(s);
        for (std::size_t i = 0; i < m; ++i) a(i, j) /= s;
    }
    return a;
}

inline Vector gaussian_vector(std::size_t m, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd;
    Vector v(m);
    for (double& x : v) x = nd(gen);
    return v;
}

/// Eigenvalues of a symmetric 2x2 matrix, descending.
inline Vector eig_sym2(double a, double b, double d) {
    const double mean = 0.5 * (a + d);
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    return {mean + rad, mean - rad};
}

/// Roots of the characteristic cubic of a symmetric 3x3 matrix (trigonometric form), descending.
inline Vector eig_sym3(const DenseMatrix& s) {
    const double p1 = s(0, 1) * s(0, 1) + s(0, 2) * s(0, 2) + s(1, 2) * s(1, 2);
    const double q = (s(0, 0) + s(1, 1) + s(2, 2)) / 3.0;
    const double p2 = (s(0, 0) - q) * (s(0, 0) - q) + (s(1, 1) - q) * (s(1, 1) - q) +
                      (s(2, 2) - q) * (s(2, 2) - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) return {q, q, q};
    double bm[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) bm[i][j] = (s(i, j) - (i == j ? q : 0.0)) / p;
    const double det = bm[0][0] * (bm[1][1] * bm[2][2] - bm[1][2] * bm[2][1]) -
                       bm[0][1] * (bm[1][0] * bm[2][2] - bm[1][2] * bm[2][0]) +
                       bm[0][2] * (bm[1][0] * bm[2][1] - bm[1][1] * bm[2][0]);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    Vector ev{e1, e2, e3};
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace fixtures
