#pragma once

// Niceness of a matrix: the non-degeneracy margin, the minimum gap between
// vertices {v : A_S^T v = s, |S| = m, s in {-1,1}^m} and the smallest vertex
// coordinate. Also the random unit-column generator and the bucket projection
// probe that bounds niceness from above.

#include <cstdint>
#include <span>
#include <vector>

#include "spikeopt/numerics.hpp"
#include "spikeopt/problem.hpp"

namespace spikeopt {

struct GammaReport {
    double gamma_nondegen = 0.0;
    double gamma_vertex_gap = 0.0;
    double gamma_min_coord = 0.0;
    double gamma = 0.0;
    /// True only for full enumeration through gamma_exact.
    bool exact = false;
    /// (support, sign) tuples examined.
    Index samples_used = 0;
};

struct Vertex {
    std::vector<Index> support;
    std::vector<int> signs;
    Vector v;
};

struct GammaLimits {
    Index max_supports = 5000;
    Index max_sign_patterns = 4096;
    /// Bound on the number of vertices held in memory for the gap computation.
    Index max_vertices = 2000000;
};

/// All vertices from nonsingular m-column supports. Throws CapExceeded beyond limits.
[[nodiscard]] std::vector<Vertex> enumerate_vertices(const DenseMatrix& a, const GammaLimits& limits = {});

/// Exact niceness by full enumeration. Requires n >= m.
[[nodiscard]] GammaReport gamma_exact(const DenseMatrix& a, const GammaLimits& limits = {});

/// Same minima over uniformly drawn (support, sign) tuples, an upper bound on
/// gamma. When trials cover the whole tuple space every tuple is visited once and
/// the values equal gamma_exact.
[[nodiscard]] GammaReport gamma_sampled(const DenseMatrix& a, Index trials, std::uint64_t seed);

/// m x n matrix with i.i.d. columns uniform on the unit sphere.
[[nodiscard]] DenseMatrix rsm_sample(Index m, Index n, std::uint64_t seed);

/// rsm_sample(m, n, seed) with a unit-norm Gaussian b drawn from the same stream
/// after the columns.
[[nodiscard]] ProblemInstance rsm_instance(Index m, Index n, std::uint64_t seed);

struct ProbeCurve {
    /// residual_norms[0] = ||A_1||; entry s is the residual after s buckets.
    Vector residual_norms;
    /// sqrt(prod_{i<=s} (1 - tau / (m - i + 1))) * ||A_1||, the decay the argument predicts.
    Vector reference;
    /// Buckets whose chosen column had squared correlation at least tau / (m - s + 1).
    Index hits = 0;
    Index bucket_size = 0;
};

/// Greedy bucket projection of the first column of a against the remaining
/// columns split into m buckets of floor((n - 1) / m).
[[nodiscard]] ProbeCurve gamma_upper_probe(const DenseMatrix& a, double tau);
[[nodiscard]] ProbeCurve gamma_upper_probe(Index m, Index n, double tau, std::uint64_t seed);

/// Least-squares slope of log(values[i]) against i.
[[nodiscard]] double log_linear_slope(std::span<const double> values);

}  // namespace spikeopt
