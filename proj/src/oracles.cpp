#include "spikeopt/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spikeopt/combinatorics.hpp"
#include "spikeopt/error.hpp"

namespace spikeopt {

const char* to_string(ProblemKind kind) noexcept { return kind == ProblemKind::Nnls ? "nnls" : "l1"; }

namespace {

void require_rhs(const DenseMatrix& a, std::span<const double> b) {
    if (b.size() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "b length differs from rows of A");
}

Vector restricted_solve(const DenseMatrix& a, const std::vector<Index>& set, std::span<const double> b) {
    const Vector z = least_squares_solve(a.select_columns(set), b);
    Vector full(a.cols(), 0.0);
    for (Index k = 0; k < set.size(); ++k) full[set[k]] = z[k];
    return full;
}

}  // namespace

OracleSolution nnls_solve(const DenseMatrix& a, std::span<const double> b, Index max_rounds) {
    require_rhs(a, b);
    if (a.empty() || a.is_zero()) throw Error(ErrorKind::InvalidArgument, "A must be nonzero");
    const Index n = a.cols();
    const Index cap = max_rounds == 0 ? 10 * n : max_rounds;
    double fro = 0.0;
    for (double v : a.data()) fro += v * v;
    const double tol = 1e-12 * std::max(1.0, std::sqrt(fro) * norm2(b));

    std::vector<bool> passive(n, false);
    std::vector<bool> blocked(n, false);
    Vector x(n, 0.0);
    Vector w = multiply_transposed(a, subtract(b, multiply(a, x)));
    Index rounds = 0;

    while (true) {
        Index pick = n;
        double best = tol;
        for (Index j = 0; j < n; ++j) {
            if (!passive[j] && !blocked[j] && w[j] > best) {
                best = w[j];
                pick = j;
            }
        }
        if (pick == n) break;
        if (++rounds > cap) {
            throw Error(ErrorKind::CapExceeded, "NNLS active set exceeded " + std::to_string(cap) + " rounds");
        }
        passive[pick] = true;

        bool first = true;
        while (true) {
            std::vector<Index> set;
            for (Index j = 0; j < n; ++j)
                if (passive[j]) set.push_back(j);
            const Vector z = restricted_solve(a, set, b);
            if (first && z[pick] <= 0.0) {
                // The new column cannot enter; skip it until x changes.
                passive[pick] = false;
                blocked[pick] = true;
                break;
            }
            first = false;
            bool feasible = true;
            for (Index j : set) feasible = feasible && z[j] > 0.0;
            if (feasible) {
                x = z;
                std::fill(blocked.begin(), blocked.end(), false);
                break;
            }
            double step = 1.0;
            for (Index j : set) {
                if (z[j] <= 0.0) step = std::min(step, x[j] / (x[j] - z[j]));
            }
            for (Index j = 0; j < n; ++j) x[j] += step * (z[j] - x[j]);
            for (Index j : set) {
                if (x[j] <= tol) {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
        w = multiply_transposed(a, subtract(b, multiply(a, x)));
    }

    OracleSolution sol;
    sol.x_opt = x;
    const Vector r = subtract(multiply(a, x), b);
    sol.objective = 0.5 * dot(r, r);
    sol.method = "lawson_hanson";
    sol.iterations = rounds;
    return sol;
}

double support_count(Index m, Index n) {
    double total = 0.0;
    for (Index k = 0; k <= std::min(m, n); ++k) total += binomial(n, k);
    return total;
}

OracleSolution l1_solve_enum(const DenseMatrix& a, std::span<const double> b, Index support_cap) {
    require_rhs(a, b);
    const Index m = a.rows();
    const Index n = a.cols();
    if (support_count(m, n) > static_cast<double>(support_cap)) {
        throw Error(ErrorKind::CapExceeded, "support enumeration needs more than " +
                                                std::to_string(support_cap) + " supports");
    }
    const double exact_tol = 1e-9 * std::max(1.0, norm2(b));

    struct Candidate {
        Vector x;
        std::vector<Index> support;
        double objective;
    };
    std::vector<Candidate> found;
    double best = std::numeric_limits<double>::infinity();

    for (Index k = 0; k <= std::min(m, n); ++k) {
        for_each_combination(n, k, [&](const std::vector<Index>& s) {
            Vector x(n, 0.0);
            if (k > 0) {
                const DenseMatrix as = a.select_columns(s);
                if (numerical_rank(as) < k) return true;
                x = restricted_solve(a, s, b);
            }
            if (norm2(subtract(multiply(a, x), b)) > exact_tol) return true;
            const double obj = norm1(x);
            if (obj < best + 1e-9) {
                best = std::min(best, obj);
                found.push_back({x, s, obj});
            }
            return true;
        });
    }
    if (found.empty()) throw Error(ErrorKind::Infeasible, "no support solves Ax = b exactly");

    OracleSolution sol;
    sol.method = "support_enumeration";
    sol.objective = best;
    std::vector<const Candidate*> optimal;
    for (const auto& c : found) {
        if (c.objective > best + 1e-9) continue;
        bool dup = false;
        for (const auto* o : optimal) dup = dup || norm_inf(subtract(o->x, c.x)) <= 1e-9;
        if (!dup) optimal.push_back(&c);
    }
    sol.distinct_minimizers = optimal.size();
    // Prefer the first (smallest) support among the minimizers.
    const Candidate* pick = optimal.front();
    sol.x_opt = pick->x;
    sol.objective = norm1(pick->x);

    // Certificate from an optimal support of full size m.
    for (const auto& c : found) {
        if (c.objective > best + 1e-9 || c.support.size() != m) continue;
        if (norm_inf(subtract(c.x, pick->x)) > 1e-9) continue;
        Vector signs(m);
        bool zero = false;
        for (Index k = 0; k < m; ++k) {
            const double xv = c.x[c.support[k]];
            zero = zero || std::abs(xv) <= 1e-12;
            signs[k] = xv > 0.0 ? 1.0 : -1.0;
        }
        if (zero) continue;
        const Vector v = least_squares_solve(a.select_columns(c.support).transpose(), signs);
        if (norm_inf(multiply_transposed(a, v)) <= 1.0 + 1e-9) {
            sol.dual_certificate = v;
            break;
        }
    }
    return sol;
}

KktReport kkt_check(ProblemKind kind, const DenseMatrix& a, std::span<const double> b, std::span<const double> x,
                    const std::optional<Vector>& multiplier, double tol) {
    require_rhs(a, b);
    if (x.size() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "x length differs from columns of A");
    KktReport rep;
    const Vector ax = multiply(a, x);
    const Vector r = subtract(ax, b);
    auto mark = [tol](KktCondition& c, double v) {
        c.violation = v;
        c.pass = v <= tol;
    };

    if (kind == ProblemKind::Nnls) {
        const Vector grad = multiply_transposed(a, r);
        const Vector y = multiplier ? *multiplier : grad;
        if (y.size() != a.cols()) throw Error(ErrorKind::DimensionMismatch, "NNLS multiplier must have n entries");
        double primal = 0.0, dual = 0.0, station = 0.0, comp = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
            primal = std::max(primal, -x[i]);
            dual = std::max(dual, -y[i]);
            station = std::max(station, std::abs(grad[i] - y[i]));
            comp = std::max(comp, std::abs(x[i] * y[i]));
        }
        mark(rep.primal_feasibility, primal);
        mark(rep.dual_feasibility, dual);
        mark(rep.stationarity, station);
        mark(rep.complementary_slackness, comp);
        rep.multiplier = y;
        return rep;
    }

    constexpr double zero_tol = 1e-9;
    Vector v;
    if (multiplier) {
        v = *multiplier;
    } else {
        std::vector<Index> support;
        Vector signs;
        for (Index i = 0; i < x.size(); ++i) {
            if (std::abs(x[i]) > zero_tol) {
                support.push_back(i);
                signs.push_back(x[i] > 0.0 ? 1.0 : -1.0);
            }
        }
        v = support.empty() ? Vector(a.rows(), 0.0)
                            : least_squares_solve(a.select_columns(support).transpose(), signs);
    }
    if (v.size() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "l1 multiplier must have m entries");
    const Vector atv = multiply_transposed(a, v);
    double station = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > zero_tol) {
            station = std::max(station, std::abs((x[i] > 0.0 ? 1.0 : -1.0) - atv[i]));
        } else {
            station = std::max(station, std::abs(atv[i]) - 1.0);
        }
    }
    mark(rep.primal_feasibility, norm_inf(r));
    mark(rep.dual_feasibility, std::max(0.0, norm_inf(atv) - 1.0));
    mark(rep.stationarity, std::max(0.0, station));
    mark(rep.complementary_slackness, std::abs(dot(v, r)));
    rep.multiplier = v;
    return rep;
}

PerturbationReport perturbation_bound_check(const ProblemInstance& instance, std::span<const double> x,
                                            std::span<const double> v, double opt_l1, double lambda_min,
                                            double eta, double tol) {
    if (!(lambda_min > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda_min must be positive");
    PerturbationReport rep;
    const double n = static_cast<double>(instance.n());
    const double residual = norm2(subtract(instance.b, multiply(instance.a, x)));
    rep.lhs = std::abs(norm1(x) - opt_l1);
    rep.rhs = std::sqrt(n / lambda_min) * residual;
    rep.slack = rep.rhs - rep.lhs;
    rep.holds = rep.slack >= -tol;
    rep.v_norm = norm2(v);
    rep.v_bound = eta * std::sqrt(n / lambda_min);
    rep.v_bound_holds = rep.v_norm <= rep.v_bound + tol;
    const Vector pv = project_onto_columns(instance.a, v);
    rep.v_in_range = norm2(subtract(pv, v)) <= 1e-8 * std::max(1.0, rep.v_norm);
    return rep;
}

EpsReport epsilon_report(const ProblemInstance& instance, std::span<const double> x, ProblemKind kind,
                         const OracleSolution& reference) {
    if (x.size() != instance.n()) throw Error(ErrorKind::DimensionMismatch, "x length differs from n");
    EpsReport rep;
    rep.kind = kind;
    const double bnorm = norm2(instance.b);
    const Vector ax = multiply(instance.a, x);
    auto relative = [bnorm](double value) { return bnorm > 0.0 ? value / bnorm : value; };

    if (kind == ProblemKind::Nnls) {
        rep.eps_l2 = relative(norm2(subtract(ax, multiply(instance.a, reference.x_opt))));
        rep.eps_l1 = std::numeric_limits<double>::quiet_NaN();
        for (double eps : kEpsilonGrid) rep.passes_at[eps] = rep.eps_l2 <= eps;
        return rep;
    }
    rep.eps_l2 = relative(norm2(subtract(instance.b, ax)));
    const double gap = norm1(x) - reference.objective;
    if (reference.objective > 0.0) {
        rep.eps_l1 = gap / reference.objective;
    } else {
        rep.eps_l1 = gap;
        rep.eps_l1_absolute = true;
    }
    for (double eps : kEpsilonGrid) rep.passes_at[eps] = rep.eps_l2 <= eps && rep.eps_l1 <= eps;
    return rep;
}

Vector least_squares_via_nnls(const DenseMatrix& a, std::span<const double> b) {
    const Index n = a.cols();
    DenseMatrix doubled(a.rows(), 2 * n);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < n; ++j) {
            doubled(i, j) = a(i, j);
            doubled(i, n + j) = -a(i, j);
        }
    const OracleSolution sol = nnls_solve(doubled, b);
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = sol.x_opt[j] - sol.x_opt[n + j];
    return x;
}

}  // namespace spikeopt
