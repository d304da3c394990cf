#include "spikeopt/niceness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "spikeopt/combinatorics.hpp"
#include "spikeopt/error.hpp"

namespace spikeopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDistinctVertex = 1e-9;

struct Accumulator {
    double nondegen = kInf;
    double min_coord = kInf;
    std::vector<Vertex> vertices;
    Index tuples = 0;
};

double nondegeneracy_margin(const DenseMatrix& a, const std::vector<Index>& support) {
    double best = kInf;
    for (Index k = 0; k < support.size(); ++k) {
        std::vector<Index> rest;
        for (Index q = 0; q < support.size(); ++q)
            if (q != k) rest.push_back(support[q]);
        const Vector col = a.column(support[k]);
        const Vector proj = project_onto_columns(a.select_columns(rest), col);
        best = std::min(best, norm2(subtract(col, proj)));
    }
    return best;
}

/// (A_S^T)^{-1} as a dense matrix, or empty when A_S is numerically singular.
DenseMatrix transposed_inverse(const DenseMatrix& a, const std::vector<Index>& support) {
    const Index m = a.rows();
    const DenseMatrix ast = a.select_columns(support).transpose();
    const HouseholderQr qr(ast, true, 1e-10);
    if (qr.rank() < m) return {};
    DenseMatrix inv(m, m);
    for (Index k = 0; k < m; ++k) {
        Vector e(m, 0.0);
        e[k] = 1.0;
        const Vector col = qr.solve_min_norm(e);
        for (Index i = 0; i < m; ++i) inv(i, k) = col[i];
    }
    return inv;
}

Vertex make_vertex(const DenseMatrix& inv, const std::vector<Index>& support, std::uint64_t mask) {
    const Index m = inv.rows();
    Vertex vx;
    vx.support = support;
    vx.signs.resize(m);
    Vector s(m);
    for (Index k = 0; k < m; ++k) {
        vx.signs[k] = (mask >> k) & 1u ? -1 : 1;
        s[k] = vx.signs[k];
    }
    vx.v = multiply(inv, s);
    return vx;
}

void record_vertex(Accumulator& acc, Vertex vx) {
    for (double c : vx.v) acc.min_coord = std::min(acc.min_coord, std::abs(c));
    acc.vertices.push_back(std::move(vx));
}

/// Minimum distance between vertices farther apart than kDistinctVertex.
double min_vertex_gap(std::vector<Vertex>& vs) {
    std::sort(vs.begin(), vs.end(), [](const Vertex& x, const Vertex& y) { return x.v[0] < y.v[0]; });
    double best = kInf;
    for (Index i = 0; i < vs.size(); ++i) {
        for (Index j = i + 1; j < vs.size(); ++j) {
            if (vs[j].v[0] - vs[i].v[0] >= best) break;
            const double d = norm2(subtract(vs[i].v, vs[j].v));
            if (d > kDistinctVertex) best = std::min(best, d);
        }
    }
    return best;
}

GammaReport finish(Accumulator& acc, bool exact) {
    GammaReport rep;
    rep.gamma_nondegen = acc.nondegen;
    rep.gamma_min_coord = acc.min_coord;
    rep.gamma_vertex_gap = min_vertex_gap(acc.vertices);
    rep.gamma = std::min({rep.gamma_nondegen, rep.gamma_vertex_gap, rep.gamma_min_coord});
    rep.exact = exact;
    rep.samples_used = acc.tuples;
    return rep;
}

void check_shape(const DenseMatrix& a) {
    if (a.rows() == 0 || a.cols() < a.rows()) {
        throw Error(ErrorKind::InvalidArgument, "niceness needs 1 <= m <= n");
    }
}

void check_limits(const DenseMatrix& a, const GammaLimits& limits) {
    const Index m = a.rows();
    const double supports = binomial(a.cols(), m);
    const double signs = std::ldexp(1.0, static_cast<int>(m));
    if (supports > static_cast<double>(limits.max_supports) ||
        signs > static_cast<double>(limits.max_sign_patterns) ||
        supports * signs > static_cast<double>(limits.max_vertices)) {
        throw Error(ErrorKind::CapExceeded,
                    "exact niceness enumeration exceeds caps; use sampled estimation instead");
    }
}

Accumulator enumerate_all(const DenseMatrix& a) {
    const Index m = a.rows();
    Accumulator acc;
    const std::uint64_t patterns = std::uint64_t{1} << m;
    for_each_combination(a.cols(), m, [&](const std::vector<Index>& support) {
        acc.nondegen = std::min(acc.nondegen, nondegeneracy_margin(a, support));
        acc.tuples += patterns;
        const DenseMatrix inv = transposed_inverse(a, support);
        if (inv.empty()) return true;
        for (std::uint64_t mask = 0; mask < patterns; ++mask) record_vertex(acc, make_vertex(inv, support, mask));
        return true;
    });
    return acc;
}

}  // namespace

std::vector<Vertex> enumerate_vertices(const DenseMatrix& a, const GammaLimits& limits) {
    check_shape(a);
    check_limits(a, limits);
    return enumerate_all(a).vertices;
}

GammaReport gamma_exact(const DenseMatrix& a, const GammaLimits& limits) {
    check_shape(a);
    check_limits(a, limits);
    Accumulator acc = enumerate_all(a);
    return finish(acc, true);
}

GammaReport gamma_sampled(const DenseMatrix& a, Index trials, std::uint64_t seed) {
    check_shape(a);
    if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be at least 1");
    const Index m = a.rows();
    const Index n = a.cols();
    const double total = binomial(n, m) * std::ldexp(1.0, static_cast<int>(m));
    if (static_cast<double>(trials) >= total) {
        Accumulator acc = enumerate_all(a);
        return finish(acc, false);
    }

    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<std::uint64_t> sign_dist(0, (std::uint64_t{1} << m) - 1);
    std::vector<Index> pool(n);
    Accumulator acc;
    for (Index t = 0; t < trials; ++t) {
        std::iota(pool.begin(), pool.end(), Index{0});
        for (Index k = 0; k < m; ++k) {
            std::uniform_int_distribution<Index> pick(k, n - 1);
            std::swap(pool[k], pool[pick(gen)]);
        }
        std::vector<Index> support(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(support.begin(), support.end());
        const std::uint64_t mask = sign_dist(gen);
        acc.nondegen = std::min(acc.nondegen, nondegeneracy_margin(a, support));
        ++acc.tuples;
        const DenseMatrix inv = transposed_inverse(a, support);
        if (!inv.empty()) record_vertex(acc, make_vertex(inv, support, mask));
    }
    return finish(acc, false);
}

namespace {

Vector unit_gaussian(Index m, std::mt19937_64& gen, std::normal_distribution<double>& normal) {
    Vector col(m);
    double len = 0.0;
    while (len == 0.0) {
        for (double& x : col) x = normal(gen);
        len = norm2(col);
    }
    for (double& x : col) x /= len;
    return col;
}

DenseMatrix sample_columns(Index m, Index n, std::mt19937_64& gen, std::normal_distribution<double>& normal) {
    DenseMatrix a(m, n);
    for (Index j = 0; j < n; ++j) {
        const Vector col = unit_gaussian(m, gen, normal);
        for (Index i = 0; i < m; ++i) a(i, j) = col[i];
    }
    return a;
}

}  // namespace

DenseMatrix rsm_sample(Index m, Index n, std::uint64_t seed) {
    if (m == 0 || n == 0) throw Error(ErrorKind::InvalidArgument, "rsm_sample needs m, n >= 1");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    return sample_columns(m, n, gen, normal);
}

ProblemInstance rsm_instance(Index m, Index n, std::uint64_t seed) {
    if (m == 0 || n == 0) throw Error(ErrorKind::InvalidArgument, "rsm_instance needs m, n >= 1");
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseMatrix a = sample_columns(m, n, gen, normal);
    Vector b = unit_gaussian(m, gen, normal);
    return ProblemInstance(std::move(a), std::move(b));
}

ProbeCurve gamma_upper_probe(const DenseMatrix& a, double tau) {
    const Index m = a.rows();
    const Index n = a.cols();
    if (m == 0 || n < 2 * m) throw Error(ErrorKind::InvalidArgument, "probe needs n >= 2m");
    if (!(tau > 0.0) || tau > static_cast<double>(m) / 4.0) {
        throw Error(ErrorKind::InvalidArgument, "probe needs 0 < tau <= m/4");
    }
    ProbeCurve curve;
    curve.bucket_size = (n - 1) / m;
    const Vector target = a.column(0);
    Vector res = target;
    std::vector<Vector> basis;
    const double start = norm2(target);
    curve.residual_norms.push_back(start);
    curve.reference.push_back(start);
    double product = 1.0;

    auto orthogonalize = [&basis](Vector c) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) axpy(-dot(q, c), q, c);
        return c;
    };

    for (Index s = 0; s < m; ++s) {
        const double threshold = tau / static_cast<double>(m - s);
        product *= std::max(0.0, 1.0 - threshold);
        double best_score = -1.0;
        Vector best_dir;
        const double res_sq = dot(res, res);
        for (Index k = 0; k < curve.bucket_size; ++k) {
            const Vector perp = orthogonalize(a.column(1 + s * curve.bucket_size + k));
            const double len_sq = dot(perp, perp);
            if (len_sq <= 1e-24) continue;
            const double proj = dot(res, perp);
            const double score = proj * proj / len_sq;
            if (score > best_score) {
                best_score = score;
                best_dir = scaled(perp, 1.0 / std::sqrt(len_sq));
            }
        }
        if (!best_dir.empty()) {
            if (res_sq > 0.0 && best_score / res_sq >= threshold) ++curve.hits;
            basis.push_back(best_dir);
            res = orthogonalize(target);
        }
        curve.residual_norms.push_back(norm2(res));
        curve.reference.push_back(std::sqrt(product) * start);
    }
    return curve;
}

ProbeCurve gamma_upper_probe(Index m, Index n, double tau, std::uint64_t seed) {
    return gamma_upper_probe(rsm_sample(m, n, seed), tau);
}

double log_linear_slope(std::span<const double> values) {
    if (values.size() < 2) throw Error(ErrorKind::InvalidArgument, "slope needs at least two points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double k = static_cast<double>(values.size());
    for (Index i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "log fit needs positive values");
        const double x = static_cast<double>(i);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

}  // namespace spikeopt
