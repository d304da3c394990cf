#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "spikeopt/combinatorics.hpp"
#include "spikeopt/error.hpp"
#include "spikeopt/oracles.hpp"

using namespace spikeopt;

namespace {

// Brute-force NNLS: best nonnegative unconstrained least-squares fit over every support.
double brute_force_nnls_residual(const DenseMatrix& a, const Vector& b) {
    const Index n = a.cols();
    double best = norm2(b);
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<Index> s;
        for (Index j = 0; j < n; ++j)
            if (mask & (1u << j)) s.push_back(j);
        const DenseMatrix as = a.select_columns(s);
        // Normal equations solved by Gaussian elimination, independent of the QR path.
        const Index k = s.size();
        DenseMatrix g = gram(as);
        Vector rhs = multiply_transposed(as, b);
        bool singular = false;
        for (Index c = 0; c < k && !singular; ++c) {
            Index p = c;
            for (Index r = c + 1; r < k; ++r)
                if (std::abs(g(r, c)) > std::abs(g(p, c))) p = r;
            if (std::abs(g(p, c)) < 1e-12) {
                singular = true;
                break;
            }
            for (Index j = 0; j < k; ++j) std::swap(g(c, j), g(p, j));
            std::swap(rhs[c], rhs[p]);
            for (Index r = c + 1; r < k; ++r) {
                const double f = g(r, c) / g(c, c);
                for (Index j = c; j < k; ++j) g(r, j) -= f * g(c, j);
                rhs[r] -= f * rhs[c];
            }
        }
        if (singular) continue;
        Vector z(k);
        for (Index r = k; r-- > 0;) {
            double acc = rhs[r];
            for (Index j = r + 1; j < k; ++j) acc -= g(r, j) * z[j];
            z[r] = acc / g(r, r);
        }
        if (*std::min_element(z.begin(), z.end()) < -1e-12) continue;
        best = std::min(best, norm2(subtract(multiply(as, z), b)));
    }
    return best;
}

}  // namespace

TEST_CASE("NNLS clips negative coordinates on the identity") {
    const auto sol = nnls_solve(DenseMatrix::identity(2), Vector{1.0, -2.0});
    CHECK(fixtures::max_abs_diff(sol.x_opt, {1.0, 0.0}) < 1e-15);
    CHECK(sol.objective == doctest::Approx(2.0));
}

TEST_CASE("NNLS solves the triangle instance exactly") {
    const auto inst = fixtures::triangle_instance();
    const auto sol = nnls_solve(inst.a, inst.b);
    for (double x : sol.x_opt) CHECK(x >= 0.0);
    CHECK(norm2(subtract(multiply(inst.a, sol.x_opt), inst.b)) < 1e-12);
}

TEST_CASE("NNLS with b opposite the cone returns zero") {
    const DenseMatrix a = DenseMatrix::from_rows({{1.0}, {1.0}});
    const Vector b{-1.0, -1.0};
    const auto sol = nnls_solve(a, b);
    CHECK(sol.x_opt == Vector{0.0});
    CHECK(std::sqrt(2.0 * sol.objective) == doctest::Approx(norm2(b)));
}

TEST_CASE("NNLS rejects a zero matrix and reports the round cap") {
    CHECK_THROWS_AS((void)nnls_solve(DenseMatrix(2, 2), Vector{1.0, 1.0}), Error);
    const DenseMatrix a = fixtures::unit_column_gaussian(3, 6, 3);
    const Vector b = multiply(a, Vector{1, 1, 1, 1, 1, 1});
    try {
        (void)nnls_solve(a, b, 1);
        FAIL("expected cap error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CapExceeded);
    }
}

TEST_CASE("NNLS agrees with brute force and satisfies KKT on random instances") {
    for (unsigned seed = 1; seed <= 50; ++seed) {
        const Index m = 2 + seed % 3;
        const Index n = 2 + seed % 5;
        const DenseMatrix a = fixtures::unit_column_gaussian(m, n, seed);
        const Vector b = fixtures::gaussian_vector(m, seed + 1000);
        const auto sol = nnls_solve(a, b);
        const double res = norm2(subtract(multiply(a, sol.x_opt), b));
        CHECK(res == doctest::Approx(brute_force_nnls_residual(a, b)).epsilon(1e-9));
        CHECK(kkt_check(ProblemKind::Nnls, a, b, sol.x_opt, std::nullopt, 1e-8).all_pass());
    }
}

TEST_CASE("l1 enumeration on the triangle instance") {
    const auto inst = fixtures::triangle_instance();
    const auto sol = l1_solve_enum(inst.a, inst.b);
    CHECK(fixtures::max_abs_diff(sol.x_opt, fixtures::triangle_x_opt) < 1e-12);
    CHECK(std::abs(sol.objective - fixtures::triangle_opt) <= 1e-9);
    REQUIRE(sol.dual_certificate.has_value());
    CHECK(fixtures::max_abs_diff(*sol.dual_certificate, fixtures::triangle_v_opt) < 1e-12);
    CHECK(sol.distinct_minimizers == 1);
}

TEST_CASE("l1 enumeration on the identity and on zero input") {
    const auto id = l1_solve_enum(DenseMatrix::identity(2), Vector{0.1, 0.4});
    CHECK(fixtures::max_abs_diff(id.x_opt, {0.1, 0.4}) < 1e-15);
    CHECK(id.objective == doctest::Approx(0.5));
    const auto zero = l1_solve_enum(fixtures::triangle_instance().a, Vector{0.0, 0.0});
    CHECK(zero.x_opt == Vector{0.0, 0.0, 0.0});
    CHECK(zero.objective == 0.0);
}

TEST_CASE("l1 enumeration reports infeasibility and the support cap") {
    const DenseMatrix a = DenseMatrix::from_rows({{1.0, 2.0}, {0.0, 0.0}});
    try {
        (void)l1_solve_enum(a, Vector{1.0, 1.0});
        FAIL("expected infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
    }
    try {
        (void)l1_solve_enum(fixtures::unit_column_gaussian(3, 40, 1), Vector{1, 1, 1}, 100);
        FAIL("expected cap");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CapExceeded);
    }
}

TEST_CASE("l1 optimum is no worse than random feasible points") {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        const DenseMatrix a = fixtures::unit_column_gaussian(2, 4, seed);
        const Vector x0 = fixtures::gaussian_vector(4, seed + 300);
        const Vector b = multiply(a, x0);
        const auto sol = l1_solve_enum(a, b);
        // Feasible points x0 + (I - A^+ A) z.
        for (unsigned k = 0; k < 50; ++k) {
            const Vector z = fixtures::gaussian_vector(4, seed * 1000 + k);
            const Vector pz = least_squares_solve(a, multiply(a, z));
            const Vector x = add(x0, subtract(z, pz));
            CHECK(norm1(x) >= sol.objective - 1e-9);
        }
    }
}

TEST_CASE("l1 certificates give strong duality on random instances") {
    int certified = 0;
    for (unsigned seed = 1; seed <= 50; ++seed) {
        const DenseMatrix a = fixtures::unit_column_gaussian(3, 6, seed);
        const Vector b = fixtures::gaussian_vector(3, seed + 77);
        const auto sol = l1_solve_enum(a, b);
        CHECK(norm_inf(subtract(multiply(a, sol.x_opt), b)) <= 1e-8);
        if (sol.dual_certificate) {
            ++certified;
            CHECK(std::abs(dot(b, *sol.dual_certificate) - sol.objective) <= 1e-8);
            CHECK(kkt_check(ProblemKind::L1, a, b, sol.x_opt, sol.dual_certificate).all_pass());
        }
        CHECK(sol.distinct_minimizers == 1);
    }
    CHECK(certified > 40);
}

TEST_CASE("l1 enumeration is invariant to column permutation") {
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const DenseMatrix a = fixtures::unit_column_gaussian(3, 5, seed);
        const Vector b = fixtures::gaussian_vector(3, seed + 5);
        const std::vector<Index> perm{4, 2, 0, 3, 1};
        const auto base = l1_solve_enum(a, b);
        const auto permuted = l1_solve_enum(a.select_columns(perm), b);
        CHECK(permuted.objective == doctest::Approx(base.objective).epsilon(1e-12));
        for (Index k = 0; k < perm.size(); ++k) CHECK(std::abs(permuted.x_opt[k] - base.x_opt[perm[k]]) < 1e-9);
    }
}

TEST_CASE("KKT check on the triangle optimum and a perturbed point") {
    const auto inst = fixtures::triangle_instance();
    const auto good = kkt_check(ProblemKind::L1, inst.a, inst.b, fixtures::triangle_x_opt, fixtures::triangle_v_opt);
    CHECK(good.all_pass());
    Vector bad = fixtures::triangle_x_opt;
    bad[0] += 0.01;
    const auto rep = kkt_check(ProblemKind::L1, inst.a, inst.b, bad, fixtures::triangle_v_opt);
    CHECK_FALSE(rep.primal_feasibility.pass);
    CHECK(rep.primal_feasibility.violation == doctest::Approx(0.01));
}

TEST_CASE("KKT check for NNLS on the identity") {
    const auto rep = kkt_check(ProblemKind::Nnls, DenseMatrix::identity(2), Vector{1.0, -2.0}, Vector{1.0, 0.0});
    CHECK(rep.stationarity.pass);
    CHECK(rep.complementary_slackness.pass);
    CHECK(rep.all_pass());
    CHECK(fixtures::max_abs_diff(rep.multiplier, {0.0, 2.0}) < 1e-15);
    const auto off = kkt_check(ProblemKind::Nnls, DenseMatrix::identity(2), Vector{1.0, -2.0}, Vector{1.0, 0.5});
    CHECK_FALSE(off.complementary_slackness.pass);
}

TEST_CASE("perturbation bound") {
    const auto inst = fixtures::triangle_instance();
    const auto exact = perturbation_bound_check(inst, fixtures::triangle_x_opt, fixtures::triangle_v_opt,
                                                fixtures::triangle_opt, 1.0);
    CHECK(exact.lhs < 1e-15);
    CHECK(exact.holds);
    CHECK(exact.slack == doctest::Approx(exact.rhs));
    CHECK(exact.v_bound_holds);
    CHECK(exact.v_in_range);
    const auto zero = perturbation_bound_check(inst, Vector{0, 0, 0}, Vector{0, 0}, fixtures::triangle_opt, 1.0);
    CHECK(zero.v_bound_holds);
    CHECK(zero.holds);
}

TEST_CASE("epsilon reports") {
    const auto inst = fixtures::triangle_instance();
    const auto l1 = l1_solve_enum(inst.a, inst.b);
    const auto at_opt = epsilon_report(inst, l1.x_opt, ProblemKind::L1, l1);
    CHECK(at_opt.eps_l2 < 1e-15);
    CHECK(std::abs(at_opt.eps_l1) < 1e-12);
    CHECK(at_opt.passes_at.at(0.001));
    const auto at_zero = epsilon_report(inst, Vector{0, 0, 0}, ProblemKind::L1, l1);
    CHECK(at_zero.eps_l2 == doctest::Approx(1.0));
    CHECK(at_zero.eps_l1 == doctest::Approx(-1.0));
    CHECK_FALSE(at_zero.passes_at.at(0.5));

    const auto nn = nnls_solve(inst.a, inst.b);
    const auto nn_rep = epsilon_report(inst, nn.x_opt, ProblemKind::Nnls, nn);
    CHECK(nn_rep.eps_l2 < 1e-12);
    CHECK(std::isnan(nn_rep.eps_l1));

    const ProblemInstance zero_b(inst.a, Vector{0.0, 0.0});
    const auto zl1 = l1_solve_enum(zero_b.a, zero_b.b);
    const auto zrep = epsilon_report(zero_b, Vector{0.1, 0, 0}, ProblemKind::L1, zl1);
    CHECK(zrep.eps_l1_absolute);
    CHECK(zrep.eps_l1 == doctest::Approx(0.1));
}

TEST_CASE("least squares through the doubled NNLS instance") {
    for (unsigned seed = 1; seed <= 30; ++seed) {
        const DenseMatrix a = fixtures::unit_column_gaussian(3, 4, seed);
        const Vector b = fixtures::gaussian_vector(3, seed + 11);
        const Vector x = least_squares_via_nnls(a, b);
        const Vector direct = least_squares_solve(a, b);
        CHECK(norm_inf(subtract(multiply(a, x), multiply(a, direct))) <= 1e-7);
    }
    for (unsigned seed = 1; seed <= 30; ++seed) {
        const DenseMatrix a = fixtures::unit_column_gaussian(5, 3, seed);
        const Vector b = fixtures::gaussian_vector(5, seed + 11);
        CHECK(fixtures::max_abs_diff(least_squares_via_nnls(a, b), least_squares_solve(a, b)) <= 1e-7);
    }
}

TEST_CASE("combination enumeration") {
    int count = 0;
    for_each_combination(5, 3, [&](const std::vector<Index>&) {
        ++count;
        return true;
    });
    CHECK(count == 10);
    CHECK(binomial(5, 3) == 10.0);
    CHECK(support_count(2, 3) == 7.0);
}
