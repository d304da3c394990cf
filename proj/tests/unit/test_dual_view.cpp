#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "spikeopt/dual_view.hpp"
#include "spikeopt/error.hpp"

using namespace spikeopt;

namespace {

class FeasibilityWatch final : public DualObserver {
public:
    FeasibilityWatch(const ProblemInstance& inst, double eta, Sidedness side) : inst_(inst), eta_(eta), side_(side) {}
    void after_step(const SimState&, std::span<const CascadeRound>, const DualState& dual) override {
        if (!violated_walls(dual.v, inst_, eta_, side_).empty()) ++violations;
        ++steps;
    }
    int violations = 0;
    int steps = 0;

private:
    const ProblemInstance& inst_;
    double eta_;
    Sidedness side_;
};

}  // namespace

TEST_CASE("drift without spikes") {
    const ProblemInstance inst(DenseMatrix::identity(2), Vector{0.1, 0.4});
    const DualState d = dual_step(DualState::initial(2), inst, {}, 0.5, 0.01);
    CHECK(d.v[0] == doctest::Approx(0.001));
    CHECK(d.v[1] == doctest::Approx(0.004));
}

TEST_CASE("a spike moves v along minus the wall normal") {
    const auto inst = fixtures::triangle_instance();
    const std::vector<CascadeRound> rounds{{SpikeEvent{2, 1}}};
    const DualState d = dual_step(DualState::initial(2), inst, rounds, 0.25, 0.0);
    CHECK(d.v[0] == doctest::Approx(-0.25 * 2.0 / 3.0));
    CHECK(d.v[1] == doctest::Approx(-0.25 * 2.0 / 3.0));
    // A negative spike and the mirrored neuron of a doubled network both move along +A_j.
    const std::vector<CascadeRound> neg{{SpikeEvent{0, -1}}, {SpikeEvent{3, 1}}};
    const DualState e = dual_step(DualState::initial(2), inst, neg, 0.5, 0.0);
    CHECK(e.v[0] == doctest::Approx(1.0));
    CHECK(e.v[1] == doctest::Approx(0.0));
}

TEST_CASE("consistency gap") {
    const auto inst = fixtures::triangle_instance();
    const Vector v{0.3, -0.2};
    const Vector u = multiply_transposed(inst.a, v);
    CHECK(consistency_gap(u, v, inst.a) < 1e-15);
    Vector doubled = u;
    for (double x : u) doubled.push_back(-x);
    CHECK(consistency_gap(doubled, v, inst.a) < 1e-15);
    const DenseMatrix id = DenseMatrix::identity(2);
    CHECK(consistency_gap(Vector{1.0, 2.0}, Vector{1.0 + 1e-3, 2.0}, id) == doctest::Approx(1e-3));
    CHECK_THROWS_AS((void)consistency_gap(Vector{1.0}, Vector{1.0, 2.0}, id), Error);
}

TEST_CASE("coupled run keeps u = A^T v over 10^5 steps") {
    const auto inst = fixtures::triangle_instance();
    const Network net = build_network(inst, Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 100.0;
    cfg.probe_stride = 1000;
    const auto run = simulate_with_dual(inst, net, cfg);
    CHECK(run.trace.final_state.step_index == 100000);
    CHECK(consistency_gap(run.trace.final_state.u, run.dual.v, inst.a) <= 1e-7);
    CHECK(run.max_consistency_gap <= 1e-7);
    CHECK(run.max_identity_gap <= 1e-7);
    for (const auto& s : run.trace.snapshots) CHECK(s.v.has_value());
}

TEST_CASE("doubled network keeps the same dual state") {
    const auto inst = fixtures::triangle_instance();
    const Network net = build_network(inst, Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 30.0;
    cfg.probe_stride = 1000;
    const auto a = simulate_with_dual(inst, net, cfg);
    const auto b = simulate_with_dual(inst, two_sided_to_one_sided(net), cfg);
    CHECK(a.dual.v == b.dual.v);
    CHECK(b.max_consistency_gap <= 1e-9);
}

TEST_CASE("walls crossed by a point") {
    const ProblemInstance one(DenseMatrix::from_rows({{0.5}, {1.0}}), Vector{0.0, 0.0});
    CHECK(violated_walls(Vector{0.0, 0.0}, one, 1.0).empty());
    CHECK(violated_walls(Vector{0.1, 0.2}, one, 1.0).empty());
    CHECK(violated_walls(Vector{0.0, 1.2}, one, 1.0) == std::vector<long>{1});
    CHECK(violated_walls(Vector{0.0, -1.2}, one, 1.0) == std::vector<long>{-1});
    CHECK(violated_walls(Vector{0.0, -1.2}, one, 1.0, Sidedness::OneSided).empty());
    const auto slacks = wall_slacks(Vector{0.0, 1.2}, one, 1.0);
    REQUIRE(slacks.size() == 2);
    CHECK(slacks[0].slack == doctest::Approx(-0.2));
    CHECK(slacks[1].slack == doctest::Approx(2.2));
}

TEST_CASE("dual objective and strong duality on the triangle instance") {
    const auto inst = fixtures::triangle_instance();
    CHECK(dual_objective(fixtures::triangle_v_opt, inst.b) == doctest::Approx(fixtures::triangle_opt));
    CHECK(dual_objective(Vector{0.0, 0.0}, inst.b) == 0.0);
    CHECK(fixtures::triangle_opt == doctest::Approx(norm1(fixtures::triangle_x_opt)));
}

TEST_CASE("weak duality for feasible points of the triangle instance") {
    const auto inst = fixtures::triangle_instance();
    for (unsigned seed = 1; seed <= 200; ++seed) {
        Vector v = fixtures::gaussian_vector(2, seed);
        const double scale = norm_inf(multiply_transposed(inst.a, v));
        v = scaled(v, 1.0 / scale);
        CHECK(dual_objective(v, inst.b) <= fixtures::triangle_opt + 1e-9);
    }
}

TEST_CASE("dual stays feasible after every step") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst(fixtures::unit_column_gaussian(3, 6, seed), fixtures::gaussian_vector(3, seed));
        for (auto side : {Sidedness::OneSided, Sidedness::TwoSided}) {
            const Network net = build_network(inst, side, 0.02, 1.0);
            SimConfig cfg;
            cfg.dt = 0.002;
            cfg.horizon = 20.0;
            cfg.probe_stride = 500;
            FeasibilityWatch watch(inst, 1.0, side);
            const auto run = simulate_with_dual(inst, net, cfg, &watch);
            CHECK(watch.steps == 10000);
            CHECK(watch.violations == 0);
            CHECK(run.max_consistency_gap <= 1e-7);
            CHECK(run.max_identity_gap <= 1e-7);
        }
    }
}

TEST_CASE("triangle run: dual average approaches (0.5, 1) and objective stays below OPT") {
    const auto inst = fixtures::triangle_instance();
    const Network net = build_network(inst, Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 2000.0;
    cfg.probe_stride = 1000;
    const auto run = simulate_with_dual(inst, net, cfg);
    Vector avg(2, 0.0);
    int count = 0;
    for (const auto& s : run.trace.snapshots) {
        CHECK(dual_objective(*s.v, inst.b) <= fixtures::triangle_opt + 1e-9);
        if (s.time >= 0.75 * cfg.horizon) {
            axpy(1.0, *s.v, avg);
            ++count;
        }
    }
    avg = scaled(avg, 1.0 / count);
    CHECK(fixtures::max_abs_diff(avg, fixtures::triangle_v_opt) <= 0.1);
}

TEST_CASE("neuron columns of doubled networks") {
    CHECK(neuron_column(1, 3).column == 1);
    CHECK(neuron_column(4, 3).column == 1);
    CHECK(neuron_column(4, 3).sign == -1.0);
    CHECK_THROWS_AS((void)neuron_column(6, 3), Error);
}
