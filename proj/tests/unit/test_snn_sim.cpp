#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "spikeopt/error.hpp"
#include "spikeopt/snn_sim.hpp"

using namespace spikeopt;

namespace {

// Neuron 1 is driven at 0.1; each of its spikes raises neuron 2 by 0.1.
Network relay_network() {
    return Network(DenseMatrix::from_rows({{1.0, -0.1}, {0.0, 1.0}}), Vector{0.1, 0.0},
                   Sidedness::OneSided, 1.0, 1.0);
}

std::vector<double> spike_times(const SpikeTrace& trace, Index neuron) {
    std::vector<double> out;
    for (const auto& e : trace.events)
        if (e.neuron == neuron) out.push_back(e.time);
    return out;
}

}  // namespace

TEST_CASE("network from the triangle instance") {
    const Network net = build_network(fixtures::triangle_instance(), Sidedness::TwoSided, 0.01, 1.0);
    REQUIRE(net.n() == 3);
    CHECK(net.connectivity(0, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(net.connectivity(2, 2) == doctest::Approx(8.0 / 9.0));
    CHECK(net.connectivity(0, 1) == 0.0);
    CHECK(fixtures::max_abs_diff(net.input_current, {0.1, 0.4, 1.0 / 3.0}) < 1e-15);
}

TEST_CASE("network from the identity") {
    const Network net =
        build_network(ProblemInstance(DenseMatrix::identity(2), Vector{1.0, 0.0}), Sidedness::OneSided, 1.0, 1.0);
    CHECK(net.connectivity == DenseMatrix::identity(2));
    CHECK(net.input_current == Vector{1.0, 0.0});
}

TEST_CASE("connectivity is a symmetric positive semidefinite Gram matrix") {
    for (unsigned seed = 1; seed <= 10; ++seed) {
        const ProblemInstance inst(fixtures::unit_column_gaussian(3, 6, seed), fixtures::gaussian_vector(3, seed));
        const Network net = build_network(inst, Sidedness::OneSided, 0.1, 1.0);
        for (Index i = 0; i < 6; ++i)
            for (Index j = 0; j < 6; ++j) CHECK(net.connectivity(i, j) == net.connectivity(j, i));
        const Vector z = fixtures::gaussian_vector(6, seed + 50);
        CHECK(dot(z, multiply(net.connectivity, z)) >= -1e-12);
    }
}

TEST_CASE("network construction validates parameters") {
    CHECK_THROWS_AS(Network(DenseMatrix(2, 3), Vector{0, 0}, Sidedness::OneSided, 1.0, 1.0), Error);
    CHECK_THROWS_AS(Network(DenseMatrix(2, 2), Vector{0}, Sidedness::OneSided, 1.0, 1.0), Error);
    CHECK_THROWS_AS(Network(DenseMatrix(1, 1), Vector{0}, Sidedness::OneSided, 0.0, 1.0), Error);
    CHECK_THROWS_AS(Network(DenseMatrix(1, 1), Vector{0}, Sidedness::OneSided, 1.0, -1.0), Error);
    CHECK_THROWS_AS((void)build_network(ProblemInstance(DenseMatrix(2, 2), Vector{1, 1}),
                                        Sidedness::OneSided, 1.0, 1.0),
                    Error);
}

TEST_CASE("doubling a one-neuron network") {
    const Network net(DenseMatrix::from_rows({{1.0}}), Vector{0.5}, Sidedness::TwoSided, 1.0, 1.0);
    const Network d = two_sided_to_one_sided(net);
    CHECK(d.sidedness == Sidedness::OneSided);
    CHECK(d.connectivity == DenseMatrix::from_rows({{1.0, -1.0}, {-1.0, 1.0}}));
    CHECK(d.input_current == Vector{0.5, -0.5});
    CHECK_THROWS_AS((void)two_sided_to_one_sided(d), Error);
}

TEST_CASE("doubled network reproduces the two-sided run on the triangle instance") {
    const Network net = build_network(fixtures::triangle_instance(), Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 50.0;
    cfg.probe_stride = 1000;
    const auto two = simulate(net, cfg);
    const auto one = simulate(two_sided_to_one_sided(net), cfg);
    const Vector x2 = firing_rate(two.final_state, net.spike_strength);
    const Vector x1 = fold_doubled_rates(firing_rate(one.final_state, net.spike_strength));
    CHECK(fixtures::max_abs_diff(x1, x2) < 1e-9);
    REQUIRE(one.events.size() == two.events.size());
    for (Index k = 0; k < one.events.size(); ++k) {
        const auto& a = two.events[k];
        const auto& b = one.events[k];
        CHECK(a.time == b.time);
        CHECK(b.sign == 1);
        CHECK((a.sign > 0 ? a.neuron : a.neuron + 3) == b.neuron);
    }
}

TEST_CASE("doubled network matches two-sided runs on random instances") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst(fixtures::unit_column_gaussian(3, 5, seed), fixtures::gaussian_vector(3, seed + 9));
        const Network net = build_network(inst, Sidedness::TwoSided, 0.02, 1.0);
        SimConfig cfg;
        cfg.dt = 0.002;
        cfg.horizon = 20.0;
        cfg.probe_stride = 10000;
        const auto two = simulate(net, cfg);
        const auto one = simulate(two_sided_to_one_sided(net), cfg);
        for (Index i = 0; i < 5; ++i) {
            CHECK(one.final_state.k_pos[i] == two.final_state.k_pos[i]);
            CHECK(one.final_state.k_pos[i + 5] == two.final_state.k_neg[i]);
        }
    }
}

TEST_CASE("zero input never fires in either form") {
    const ProblemInstance inst(fixtures::triangle_instance().a, Vector{0.0, 0.0});
    const Network net = build_network(inst, Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 10.0;
    cfg.probe_stride = 100;
    CHECK(simulate(net, cfg).events.empty());
    CHECK(simulate(two_sided_to_one_sided(net), cfg).events.empty());
}

TEST_CASE("relay network: first spike of the driven neuron at t = 10") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 15.0;
    cfg.probe_stride = 100;
    const auto trace = simulate(relay_network(), cfg);
    const auto t1 = spike_times(trace, 0);
    REQUIRE(!t1.empty());
    CHECK(std::abs(t1.front() - 10.0) <= cfg.dt + 1e-12);
}

TEST_CASE("relay network converges to rates (0.1, 0.01)") {
    SimConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 500.0;
    cfg.probe_stride = 1000;
    const auto trace = simulate(relay_network(), cfg);
    const Vector x = firing_rate(trace.final_state, 1.0);
    CHECK(std::abs(x[0] - 0.1) <= 0.05 * 0.1);
    CHECK(std::abs(x[1] - 0.01) <= 0.05 * 0.01);
    const auto t1 = spike_times(trace, 0);
    for (Index k = 1; k < t1.size(); ++k) CHECK(std::abs(t1[k] - t1[k - 1] - 10.0) <= cfg.dt + 1e-9);
    const auto t2 = spike_times(trace, 1);
    REQUIRE(t2.size() >= 2);
    for (Index k = 1; k < t2.size(); ++k) CHECK(std::abs(t2[k] - t2[k - 1] - 100.0) <= 2 * cfg.dt + 1e-9);
}

TEST_CASE("a step without input only advances time") {
    const Network net(DenseMatrix::identity(2), Vector{0.0, 0.0}, Sidedness::TwoSided, 1.0, 1.0);
    SimConfig cfg;
    const SimState s = step(SimState::initial(2), net, cfg);
    CHECK(s.u == Vector{0.0, 0.0});
    CHECK(s.t == doctest::Approx(cfg.dt));
    CHECK(s.k_pos == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("single neuron charging time matches 1 / current") {
    const Network net(DenseMatrix::from_rows({{1.0}}), Vector{0.3}, Sidedness::OneSided, 1.0, 1.0);
    SimConfig cfg;
    cfg.dt = 0.01;
    SimState s = SimState::initial(1);
    double u_before = 0.0;
    while (s.k_pos[0] == 0) {
        u_before = s.u[0];
        s = step(s, net, cfg);
    }
    CHECK(s.t > 3.33);
    CHECK(s.t <= 3.34 + 1e-12);
    CHECK(s.u[0] == doctest::Approx(u_before + 0.3 * cfg.dt - 1.0));
}

TEST_CASE("oversized spikes trip the cascade cap") {
    // Mutual excitation: each spike pushes the other neuron further above threshold.
    const Network net(DenseMatrix::from_rows({{1.0, -2.0}, {-2.0, 1.0}}), Vector{1.0, 1.0},
                      Sidedness::OneSided, 1.0, 1.0);
    SimConfig cfg;
    cfg.dt = 0.5;
    cfg.horizon = 10.0;
    try {
        (void)simulate(net, cfg);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Divergence);
    }
}

TEST_CASE("firing rate from counts") {
    SimState s = SimState::initial(1);
    s.k_pos[0] = 7;
    CHECK(firing_rate(s, 0.5, 10.0)[0] == doctest::Approx(0.35));
    CHECK(firing_rate(SimState::initial(3), 1.0, 2.0) == Vector{0.0, 0.0, 0.0});
    CHECK_THROWS_AS((void)firing_rate(s, 1.0, 0.0), Error);
}

TEST_CASE("firing rate from the event log agrees with the state counts") {
    const Network net = build_network(fixtures::triangle_instance(), Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 20.0;
    cfg.probe_stride = 1000;
    const auto trace = simulate(net, cfg);
    const Vector a = firing_rate(trace, 3, 0.01, trace.final_state.t);
    const Vector b = firing_rate(trace.final_state, 0.01);
    CHECK(fixtures::max_abs_diff(a, b) < 1e-15);
}

TEST_CASE("threshold invariant, event ordering and count consistency") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst(fixtures::unit_column_gaussian(3, 6, seed), fixtures::gaussian_vector(3, seed));
        for (auto side : {Sidedness::OneSided, Sidedness::TwoSided}) {
            const Network net = build_network(inst, side, 0.02, 1.0);
            SimConfig cfg;
            cfg.dt = 0.002;
            cfg.horizon = 10.0;
            cfg.probe_stride = 1;
            const auto trace = simulate(net, cfg);
            for (const auto& snap : trace.snapshots)
                for (double u : snap.u) {
                    CHECK(u <= net.threshold);
                    if (side == Sidedness::TwoSided) CHECK(u >= -net.threshold);
                }
            std::vector<std::int64_t> pos(6, 0), neg(6, 0);
            double last = 0.0;
            for (const auto& e : trace.events) {
                CHECK(e.time >= last);
                last = e.time;
                (e.sign > 0 ? pos : neg)[e.neuron]++;
            }
            CHECK(pos == trace.final_state.k_pos);
            CHECK(neg == trace.final_state.k_neg);
        }
    }
}

TEST_CASE("potentials obey the conservation identity") {
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const ProblemInstance inst(fixtures::unit_column_gaussian(3, 6, seed), fixtures::gaussian_vector(3, seed));
        const Network net = build_network(inst, Sidedness::TwoSided, 0.02, 1.0);
        SimConfig cfg;
        cfg.dt = 0.002;
        cfg.horizon = 20.0;
        cfg.probe_stride = 10000;
        const auto trace = simulate(net, cfg);
        const auto& s = trace.final_state;
        Vector k(6);
        for (Index i = 0; i < 6; ++i) k[i] = -net.spike_strength * static_cast<double>(s.k_pos[i] - s.k_neg[i]);
        const Vector expected = add(multiply(net.connectivity, k), scaled(net.input_current, s.t));
        CHECK(fixtures::max_abs_diff(expected, s.u) <= 1e-8 * static_cast<double>(s.step_index));
    }
}

TEST_CASE("simulation is deterministic") {
    const Network net = build_network(fixtures::triangle_instance(), Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 10.0;
    cfg.probe_stride = 100;
    const auto a = simulate(net, cfg);
    const auto b = simulate(net, cfg);
    CHECK(a.events == b.events);
    CHECK(a.final_state.u == b.final_state.u);
}

TEST_CASE("triangle instance: signed rates approach the sparsest solution") {
    const Network net = build_network(fixtures::triangle_instance(), Sidedness::TwoSided, 0.01, 1.0);
    SimConfig cfg;
    cfg.dt = 0.001;
    cfg.horizon = 2000.0;
    cfg.probe_stride = 100000;
    const auto trace = simulate(net, cfg);
    const Vector x = firing_rate(trace.final_state, net.spike_strength);
    CHECK(fixtures::max_abs_diff(x, fixtures::triangle_x_opt) <= 0.02);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.dt = 2.0;
    cfg.horizon = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.dt = 0.1;
    cfg.probe_stride = 0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.probe_stride = 1;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.steps() == 10);
}
