#pragma once

// Dense linear algebra used throughout the solver: a row-major matrix type,
// BLAS-1 style helpers, a rank-revealing QR (column pivoting plus a complete
// orthogonal decomposition for the minimum-norm solve) and a cyclic Jacobi
// eigen-solver for small symmetric matrices.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace spikeopt {

using Index = std::size_t;
using Vector = std::vector<double>;

class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols, double fill = 0.0);
    /// Takes ownership of row-major entries; throws on size mismatch or non-finite data.
    DenseMatrix(Index rows, Index cols, std::vector<double> row_major);

    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
    /// Builds a dim x cols.size() matrix whose j-th column is cols[j].
    static DenseMatrix from_columns(std::span<const Vector> cols, Index dim);
    static DenseMatrix identity(Index n);

    [[nodiscard]] Index rows() const noexcept { return rows_; }
    [[nodiscard]] Index cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    double& operator()(Index i, Index j) noexcept { return data_[i * cols_ + j]; }
    double operator()(Index i, Index j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
    [[nodiscard]] std::span<const double> row(Index i) const noexcept {
        return std::span<const double>(data_).subspan(i * cols_, cols_);
    }
    [[nodiscard]] Vector column(Index j) const;

    [[nodiscard]] DenseMatrix transpose() const;
    [[nodiscard]] DenseMatrix select_columns(std::span<const Index> indices) const;
    [[nodiscard]] bool is_zero() const noexcept;
    [[nodiscard]] bool all_finite() const noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<double> data_;
};

// Vector helpers. All of them check dimensions and throw DimensionMismatch.
[[nodiscard]] double dot(std::span<const double> a, std::span<const double> b);
[[nodiscard]] double norm2(std::span<const double> a);
[[nodiscard]] double norm1(std::span<const double> a) noexcept;
[[nodiscard]] double norm_inf(std::span<const double> a) noexcept;
[[nodiscard]] Vector add(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vector subtract(std::span<const double> a, std::span<const double> b);
[[nodiscard]] Vector scaled(std::span<const double> a, double s);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);

[[nodiscard]] Vector multiply(const DenseMatrix& a, std::span<const double> x);
/// A^T x without forming the transpose.
[[nodiscard]] Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x);
[[nodiscard]] DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b);
/// A^T A
[[nodiscard]] DenseMatrix gram(const DenseMatrix& a);

/// Householder QR with optional column pivoting. With pivoting, `rank` is the
/// number of diagonal entries of R above rank_tol * |R(0,0)|.
class HouseholderQr {
public:
    HouseholderQr(DenseMatrix a, bool pivot, double rank_tol = 1e-12);

    [[nodiscard]] Index rank() const noexcept { return rank_; }
    [[nodiscard]] const std::vector<Index>& permutation() const noexcept { return perm_; }
    /// Upper-trapezoidal factor (rows x cols, permuted column order).
    [[nodiscard]] DenseMatrix r() const;

    void apply_qt(std::span<double> x) const;
    void apply_q(std::span<double> x) const;

    /// Minimum-norm least-squares solution of A x = b.
    [[nodiscard]] Vector solve_min_norm(std::span<const double> b) const;

private:
    DenseMatrix packed_;
    std::vector<Vector> reflectors_;
    std::vector<double> betas_;
    std::vector<Index> perm_;
    Index rank_ = 0;
};

/// Minimum-norm minimizer of ||A x - b||_2.
[[nodiscard]] Vector least_squares_solve(const DenseMatrix& a, std::span<const double> b);

/// Orthogonal projection of v onto span(cols). An empty column list projects to zero.
[[nodiscard]] Vector project_onto_span(std::span<const Vector> cols, std::span<const double> v);
[[nodiscard]] Vector project_onto_columns(const DenseMatrix& cols, std::span<const double> v);

[[nodiscard]] Index numerical_rank(const DenseMatrix& a, double rank_tol = 1e-10);

struct SpectralSummary {
    double lambda_max = 0.0;
    /// Smallest eigenvalue of A^T A above the rank cutoff.
    double lambda_min = 0.0;
    double kappa = 1.0;
    /// Eigenvalues of A^T A, descending, clamped at zero.
    Vector eigenvalues;
    Index rank = 0;
};

inline constexpr double kEigenRankCutoff = 1e-10;

/// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
[[nodiscard]] Vector symmetric_eigenvalues(const DenseMatrix& s, int max_sweeps = 100);

[[nodiscard]] SpectralSummary spectral_summary(const DenseMatrix& a,
                                               double rank_cutoff = kEigenRankCutoff);

/// Returns v in range(A) with A^T v = u. Throws OutOfRange when u is not in
/// range(A^T) to within tol * max(1, ||u||).
[[nodiscard]] Vector pseudo_inverse_apply(const DenseMatrix& a, std::span<const double> u,
                                          double tol = 1e-9);

/// sqrt(x^T M x) for positive semidefinite M. Not used by any solver path.
[[nodiscard]] double a_norm(const DenseMatrix& m, std::span<const double> x);

}  // namespace spikeopt
