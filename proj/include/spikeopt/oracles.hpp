#pragma once

// Reference solvers and optimality checks used to ground-truth SNN outputs.

#include <map>
#include <optional>
#include <span>
#include <string>

#include "spikeopt/numerics.hpp"
#include "spikeopt/problem.hpp"

namespace spikeopt {

enum class ProblemKind { Nnls, L1 };

[[nodiscard]] const char* to_string(ProblemKind kind) noexcept;

struct OracleSolution {
    Vector x_opt;
    double objective = 0.0;
    std::optional<Vector> dual_certificate;
    std::string method;
    Index iterations = 0;
    /// l1 only: number of geometrically distinct basic minimizers found (1 when unique).
    Index distinct_minimizers = 1;
};

/// Lawson-Hanson active set for min ||Ax - b||^2 / 2 subject to x >= 0.
/// objective is ||Ax - b||_2^2 / 2. Throws CapExceeded after max_rounds outer
/// rounds (0 means 10 * n).
[[nodiscard]] OracleSolution nnls_solve(const DenseMatrix& a, std::span<const double> b,
                                        Index max_rounds = 0);

inline constexpr Index kDefaultSupportCap = 200000;

/// min ||x||_1 subject to Ax = b by enumerating supports of size <= m with full
/// column rank. Throws Infeasible when no support solves Ax = b and CapExceeded
/// when the number of supports exceeds support_cap.
[[nodiscard]] OracleSolution l1_solve_enum(const DenseMatrix& a, std::span<const double> b,
                                           Index support_cap = kDefaultSupportCap);

/// Number of supports l1_solve_enum would visit.
[[nodiscard]] double support_count(Index m, Index n);

struct KktCondition {
    double violation = 0.0;
    bool pass = false;
};

struct KktReport {
    KktCondition primal_feasibility;
    KktCondition dual_feasibility;
    KktCondition stationarity;
    KktCondition complementary_slackness;
    /// Multiplier used: y (n entries) for NNLS, v (m entries) for l1.
    Vector multiplier;

    [[nodiscard]] bool all_pass() const noexcept {
        return primal_feasibility.pass && dual_feasibility.pass && stationarity.pass &&
               complementary_slackness.pass;
    }
};

/// NNLS: multiplier y >= 0 of x >= 0, computed as A^T (Ax - b) when absent.
/// l1: equality multiplier v; when absent it is the min-norm solution of
/// A_S^T v = sign(x_S) on the support S of x. Each violation is compared with tol.
[[nodiscard]] KktReport kkt_check(ProblemKind kind, const DenseMatrix& a, std::span<const double> b,
                                  std::span<const double> x,
                                  const std::optional<Vector>& multiplier = std::nullopt,
                                  double tol = 1e-9);

struct PerturbationReport {
    double lhs = 0.0;  ///< | ||x||_1 - OPT |
    double rhs = 0.0;  ///< sqrt(n / lambda_min) * ||b - A x||_2
    double slack = 0.0;
    bool holds = false;
    double v_norm = 0.0;
    double v_bound = 0.0;  ///< eta * sqrt(n / lambda_min)
    bool v_bound_holds = false;
    bool v_in_range = false;
};

[[nodiscard]] PerturbationReport perturbation_bound_check(const ProblemInstance& instance,
                                                          std::span<const double> x,
                                                          std::span<const double> v, double opt_l1,
                                                          double lambda_min, double eta = 1.0,
                                                          double tol = 1e-9);

inline const std::vector<double> kEpsilonGrid{0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.001};

struct EpsReport {
    ProblemKind kind = ProblemKind::Nnls;
    double eps_l2 = 0.0;
    /// (||x||_1 - OPT) / OPT, or the absolute gap when OPT = 0. NaN for NNLS.
    double eps_l1 = 0.0;
    bool eps_l1_absolute = false;
    std::map<double, bool> passes_at;
};

/// NNLS: eps_l2 = ||Ax - Ax*|| / ||b||. l1: eps_l2 = ||b - Ax|| / ||b|| and eps_l1 as above.
/// reference is the oracle solution for the same instance and kind.
[[nodiscard]] EpsReport epsilon_report(const ProblemInstance& instance, std::span<const double> x,
                                       ProblemKind kind, const OracleSolution& reference);

/// Least squares through NNLS on [A, -A]; returns y_+ - y_-.
[[nodiscard]] Vector least_squares_via_nnls(const DenseMatrix& a, std::span<const double> b);

}  // namespace spikeopt
