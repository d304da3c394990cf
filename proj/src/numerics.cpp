#include "spikeopt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikeopt/error.hpp"

namespace spikeopt {

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(ErrorKind::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

}  // namespace

DenseMatrix::DenseMatrix(Index rows, Index cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) {
        throw Error(ErrorKind::InvalidArgument, "matrix fill value is not finite");
    }
}

DenseMatrix::DenseMatrix(Index rows, Index cols, std::vector<double> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
    require_same(data_.size(), rows * cols, "matrix entry count");
    if (!all_finite()) {
        throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
    }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const Index r = rows.size();
    const Index c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        require_same(row.size(), c, "ragged row");
        data.insert(data.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(data));
}

DenseMatrix DenseMatrix::from_columns(std::span<const Vector> cols, Index dim) {
    DenseMatrix m(dim, cols.size());
    for (Index j = 0; j < cols.size(); ++j) {
        require_same(cols[j].size(), dim, "column dimension");
        for (Index i = 0; i < dim; ++i) m(i, j) = cols[j][i];
    }
    if (!m.all_finite()) throw Error(ErrorKind::InvalidArgument, "matrix has non-finite entries");
    return m;
}

DenseMatrix DenseMatrix::identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector DenseMatrix::column(Index j) const {
    if (j >= cols_) throw Error(ErrorKind::OutOfRange, "column index out of range");
    Vector c(rows_);
    for (Index i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (Index i = 0; i < rows_; ++i)
        for (Index j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

DenseMatrix DenseMatrix::select_columns(std::span<const Index> indices) const {
    DenseMatrix s(rows_, indices.size());
    for (Index k = 0; k < indices.size(); ++k) {
        if (indices[k] >= cols_) throw Error(ErrorKind::OutOfRange, "column index out of range");
        for (Index i = 0; i < rows_; ++i) s(i, k) = (*this)(i, indices[k]);
    }
    return s;
}

bool DenseMatrix::is_zero() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return x == 0.0; });
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same(a.size(), b.size(), "dot");
    double s = 0.0;
    for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) {
    // Scaled accumulation so tiny or huge entries don't under/overflow.
    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double s = 0.0;
    for (double x : a) s += (x / scale) * (x / scale);
    return scale * std::sqrt(s);
}

double norm1(std::span<const double> a) noexcept {
    double s = 0.0;
    for (double x : a) s += std::abs(x);
    return s;
}

double norm_inf(std::span<const double> a) noexcept {
    double s = 0.0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
}

Vector add(std::span<const double> a, std::span<const double> b) {
    require_same(a.size(), b.size(), "add");
    Vector r(a.size());
    for (Index i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
    require_same(a.size(), b.size(), "subtract");
    Vector r(a.size());
    for (Index i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
    return r;
}

Vector scaled(std::span<const double> a, double s) {
    Vector r(a.begin(), a.end());
    for (double& x : r) x *= s;
    return r;
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
    require_same(x.size(), y.size(), "axpy");
    for (Index i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

Vector multiply(const DenseMatrix& a, std::span<const double> x) {
    require_same(a.cols(), x.size(), "matrix-vector product");
    Vector y(a.rows(), 0.0);
    for (Index i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (Index j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
    require_same(a.rows(), x.size(), "transposed matrix-vector product");
    Vector y(a.cols(), 0.0);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) y[j] += a(i, j) * x[i];
    return y;
}

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    require_same(a.cols(), b.rows(), "matrix product");
    DenseMatrix c(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (Index j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix gram(const DenseMatrix& a) {
    DenseMatrix g(a.cols(), a.cols());
    for (Index p = 0; p < a.cols(); ++p)
        for (Index q = p; q < a.cols(); ++q) {
            double s = 0.0;
            for (Index i = 0; i < a.rows(); ++i) s += a(i, p) * a(i, q);
            g(p, q) = s;
            g(q, p) = s;
        }
    return g;
}

HouseholderQr::HouseholderQr(DenseMatrix a, bool pivot, double rank_tol)
    : packed_(std::move(a)) {
    const Index m = packed_.rows();
    const Index n = packed_.cols();
    const Index steps = std::min(m, n);
    perm_.resize(n);
    for (Index j = 0; j < n; ++j) perm_[j] = j;
    reflectors_.reserve(steps);
    betas_.reserve(steps);

    auto& r = packed_;
    for (Index k = 0; k < steps; ++k) {
        if (pivot) {
            // Norms are recomputed rather than downdated; sizes here are tiny.
            Index best = k;
            double best_norm = -1.0;
            for (Index j = k; j < n; ++j) {
                double s = 0.0;
                for (Index i = k; i < m; ++i) s += r(i, j) * r(i, j);
                if (s > best_norm) {
                    best_norm = s;
                    best = j;
                }
            }
            if (best != k) {
                for (Index i = 0; i < m; ++i) std::swap(r(i, k), r(i, best));
                std::swap(perm_[k], perm_[best]);
            }
        }

        Vector v(m - k);
        for (Index i = k; i < m; ++i) v[i - k] = r(i, k);
        const double len = norm2(v);
        double beta = 0.0;
        if (len > 0.0) {
            const double alpha = v[0] > 0.0 ? -len : len;
            v[0] -= alpha;
            const double vv = dot(v, v);
            beta = vv > 0.0 ? 2.0 / vv : 0.0;
            for (Index j = k; j < n; ++j) {
                double s = 0.0;
                for (Index i = k; i < m; ++i) s += v[i - k] * r(i, j);
                s *= beta;
                for (Index i = k; i < m; ++i) r(i, j) -= s * v[i - k];
            }
            r(k, k) = alpha;
            for (Index i = k + 1; i < m; ++i) r(i, k) = 0.0;
        }
        reflectors_.push_back(std::move(v));
        betas_.push_back(beta);
    }

    if (steps == 0) return;
    if (!pivot) {
        // Without pivoting the diagonal is not ordered; count it anyway.
        double top = 0.0;
        for (Index k = 0; k < steps; ++k) top = std::max(top, std::abs(r(k, k)));
        for (Index k = 0; k < steps; ++k)
            if (std::abs(r(k, k)) > rank_tol * top && top > 0.0) ++rank_;
        return;
    }
    const double top = std::abs(r(0, 0));
    if (top == 0.0) return;
    while (rank_ < steps && std::abs(r(rank_, rank_)) > rank_tol * top) ++rank_;
}

DenseMatrix HouseholderQr::r() const {
    DenseMatrix out(packed_.rows(), packed_.cols());
    for (Index i = 0; i < packed_.rows(); ++i)
        for (Index j = i; j < packed_.cols(); ++j) out(i, j) = packed_(i, j);
    return out;
}

void HouseholderQr::apply_qt(std::span<double> x) const {
    require_same(x.size(), packed_.rows(), "apply Q^T");
    for (Index k = 0; k < reflectors_.size(); ++k) {
        const Vector& v = reflectors_[k];
        double s = 0.0;
        for (Index i = 0; i < v.size(); ++i) s += v[i] * x[k + i];
        s *= betas_[k];
        for (Index i = 0; i < v.size(); ++i) x[k + i] -= s * v[i];
    }
}

void HouseholderQr::apply_q(std::span<double> x) const {
    require_same(x.size(), packed_.rows(), "apply Q");
    for (Index kk = reflectors_.size(); kk-- > 0;) {
        const Vector& v = reflectors_[kk];
        double s = 0.0;
        for (Index i = 0; i < v.size(); ++i) s += v[i] * x[kk + i];
        s *= betas_[kk];
        for (Index i = 0; i < v.size(); ++i) x[kk + i] -= s * v[i];
    }
}

Vector HouseholderQr::solve_min_norm(std::span<const double> b) const {
    const Index n = packed_.cols();
    const Index r = rank_;
    Vector c(b.begin(), b.end());
    apply_qt(c);
    Vector y(n, 0.0);
    if (r == 0) return y;

    if (r == n) {
        for (Index kk = r; kk-- > 0;) {
            double s = c[kk];
            for (Index j = kk + 1; j < n; ++j) s -= packed_(kk, j) * y[j];
            y[kk] = s / packed_(kk, kk);
        }
    } else {
        // Complete orthogonal decomposition: factor R1^T = Z T, so R1 = T^T Z1^T,
        // then y = Z1 w with T^T w = c.
        DenseMatrix r1t(n, r);
        for (Index i = 0; i < r; ++i)
            for (Index j = i; j < n; ++j) r1t(j, i) = packed_(i, j);
        const HouseholderQr z(std::move(r1t), false);
        const DenseMatrix t = z.r();
        Vector w(n, 0.0);
        for (Index i = 0; i < r; ++i) {
            double s = c[i];
            for (Index j = 0; j < i; ++j) s -= t(j, i) * w[j];
            w[i] = s / t(i, i);
        }
        z.apply_q(w);
        y = std::move(w);
    }

    Vector x(n, 0.0);
    for (Index k = 0; k < n; ++k) x[perm_[k]] = y[k];
    return x;
}

Vector least_squares_solve(const DenseMatrix& a, std::span<const double> b) {
    require_same(a.rows(), b.size(), "least squares rhs");
    if (a.cols() == 0) return {};
    return HouseholderQr(a, true).solve_min_norm(b);
}

Vector project_onto_columns(const DenseMatrix& cols, std::span<const double> v) {
    require_same(cols.rows(), v.size(), "projection");
    if (cols.cols() == 0) return Vector(v.size(), 0.0);
    return multiply(cols, least_squares_solve(cols, v));
}

Vector project_onto_span(std::span<const Vector> cols, std::span<const double> v) {
    if (cols.empty()) return Vector(v.size(), 0.0);
    return project_onto_columns(DenseMatrix::from_columns(cols, v.size()), v);
}

Index numerical_rank(const DenseMatrix& a, double rank_tol) {
    if (a.rows() == 0 || a.cols() == 0) return 0;
    return HouseholderQr(a, true, rank_tol).rank();
}

Vector symmetric_eigenvalues(const DenseMatrix& s, int max_sweeps) {
    require_same(s.rows(), s.cols(), "eigenvalues of non-square matrix");
    const Index n = s.rows();
    DenseMatrix a = s;
    double frob = 0.0;
    for (double x : a.data()) frob += x * x;
    frob = std::sqrt(frob);

    auto off_norm = [&] {
        double o = 0.0;
        for (Index p = 0; p < n; ++p)
            for (Index q = p + 1; q < n; ++q) o += 2.0 * a(p, q) * a(p, q);
        return std::sqrt(o);
    };

    int sweep = 0;
    while (off_norm() > 1e-15 * frob) {
        if (sweep++ >= max_sweeps) {
            throw Error(ErrorKind::NonConvergence,
                        "Jacobi eigenvalue iteration did not converge in " +
                            std::to_string(max_sweeps) + " sweeps");
        }
        for (Index p = 0; p < n; ++p)
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
    }

    Vector ev(n);
    for (Index i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

SpectralSummary spectral_summary(const DenseMatrix& a, double rank_cutoff) {
    if (a.empty() || a.is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "spectral summary of a zero matrix");
    }
    SpectralSummary out;
    out.eigenvalues = symmetric_eigenvalues(gram(a));
    for (double& e : out.eigenvalues) e = std::max(e, 0.0);
    out.lambda_max = out.eigenvalues.front();
    const double cutoff = rank_cutoff * out.lambda_max;
    out.lambda_min = out.lambda_max;
    for (double e : out.eigenvalues) {
        if (e > cutoff) {
            out.lambda_min = e;
            ++out.rank;
        }
    }
    out.kappa = out.lambda_max / out.lambda_min;
    return out;
}

Vector pseudo_inverse_apply(const DenseMatrix& a, std::span<const double> u, double tol) {
    require_same(a.cols(), u.size(), "pseudo-inverse rhs");
    const DenseMatrix at = a.transpose();
    Vector v = least_squares_solve(at, u);
    const double residual = norm2(subtract(multiply(at, v), u));
    if (residual > tol * std::max(1.0, norm2(u))) {
        throw Error(ErrorKind::OutOfRange,
                    "vector is not in the range of A^T (residual " + std::to_string(residual) + ")");
    }
    return v;
}

double a_norm(const DenseMatrix& m, std::span<const double> x) {
    return std::sqrt(std::max(0.0, dot(x, multiply(m, x))));
}

}  // namespace spikeopt
