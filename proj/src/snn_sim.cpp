#include "spikeopt/snn_sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spikeopt/error.hpp"

namespace spikeopt {

Network::Network(DenseMatrix c, Vector current, Sidedness side, double alpha, double eta)
    : connectivity(std::move(c)),
      input_current(std::move(current)),
      sidedness(side),
      spike_strength(alpha),
      threshold(eta) {
    if (connectivity.rows() != connectivity.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "connectivity matrix must be square");
    }
    if (input_current.size() != connectivity.rows()) {
        throw Error(ErrorKind::DimensionMismatch, "input current length differs from neuron count");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorKind::InvalidArgument, "spike strength must be positive");
    }
    if (!(eta > 0.0) || !std::isfinite(eta)) {
        throw Error(ErrorKind::InvalidArgument, "threshold must be positive");
    }
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw Error(ErrorKind::InvalidArgument, "horizon must be positive");
    }
    if (dt > horizon) throw Error(ErrorKind::InvalidArgument, "dt exceeds horizon");
    if (probe_stride == 0) throw Error(ErrorKind::InvalidArgument, "probe_stride must be at least 1");
    if (!(relative_threshold_slack >= 0.0) || relative_threshold_slack >= 1.0) {
        throw Error(ErrorKind::InvalidArgument, "threshold slack must lie in [0, 1)");
    }
}

Index SimConfig::steps() const {
    return static_cast<Index>(std::ceil(horizon / dt - 1e-9));
}

SimState SimState::initial(Index n) {
    SimState s;
    s.u.assign(n, 0.0);
    s.k_pos.assign(n, 0);
    s.k_neg.assign(n, 0);
    return s;
}

Network build_network(const ProblemInstance& instance, Sidedness side, double alpha, double eta) {
    if (instance.a.empty() || instance.a.is_zero()) {
        throw Error(ErrorKind::InvalidArgument, "A must be nonzero");
    }
    return Network(gram(instance.a), multiply_transposed(instance.a, instance.b), side, alpha, eta);
}

Network two_sided_to_one_sided(const Network& net) {
    if (net.sidedness != Sidedness::TwoSided) {
        throw Error(ErrorKind::InvalidArgument, "network is already one-sided");
    }
    const Index n = net.n();
    DenseMatrix c(2 * n, 2 * n);
    Vector current(2 * n);
    for (Index i = 0; i < n; ++i) {
        current[i] = net.input_current[i];
        current[n + i] = -net.input_current[i];
        for (Index j = 0; j < n; ++j) {
            const double w = net.connectivity(i, j);
            c(i, j) = w;
            c(i, n + j) = -w;
            c(n + i, j) = -w;
            c(n + i, n + j) = w;
        }
    }
    return Network(std::move(c), std::move(current), Sidedness::OneSided, net.spike_strength,
                   net.threshold);
}

Vector fold_doubled_rates(std::span<const double> x) {
    if (x.size() % 2 != 0) throw Error(ErrorKind::DimensionMismatch, "doubled rate vector has odd length");
    const Index n = x.size() / 2;
    Vector out(n);
    for (Index i = 0; i < n; ++i) out[i] = x[i] - x[n + i];
    return out;
}

void charge(SimState& state, const Network& net, const SimConfig& cfg) {
    if (state.u.size() != net.n()) throw Error(ErrorKind::DimensionMismatch, "state size differs from network");
    for (Index i = 0; i < net.n(); ++i) state.u[i] += net.input_current[i] * cfg.dt;
    ++state.step_index;
    state.t = static_cast<double>(state.step_index) * cfg.dt;
}

std::vector<CascadeRound> resolve_cascade(SimState& state, const Network& net, const SimConfig& cfg) {
    const Index n = net.n();
    const double upper = net.threshold - net.threshold * cfg.relative_threshold_slack;
    const double lower = -upper;
    const bool two_sided = net.sidedness == Sidedness::TwoSided;
    const Index cap = cfg.effective_cascade_cap(n);
    const double alpha = net.spike_strength;

    std::vector<CascadeRound> rounds;
    CascadeRound fired;
    while (true) {
        fired.clear();
        for (Index i = 0; i < n; ++i)
            if (state.u[i] > upper) fired.push_back({i, 1});
        if (two_sided)
            for (Index i = 0; i < n; ++i)
                if (state.u[i] < lower) fired.push_back({i, -1});
        if (fired.empty()) break;
        if (rounds.size() >= cap) {
            throw Error(ErrorKind::Divergence,
                        "spike cascade exceeded " + std::to_string(cap) + " rounds at t = " +
                            std::to_string(state.t) + " (spike strength too large)");
        }
        for (const auto& e : fired) {
            const double s = static_cast<double>(e.sign);
            for (Index i = 0; i < n; ++i) state.u[i] -= alpha * net.connectivity(e.neuron, i) * s;
            if (e.sign > 0)
                ++state.k_pos[e.neuron];
            else
                ++state.k_neg[e.neuron];
        }
        rounds.push_back(fired);
    }
    return rounds;
}

std::vector<CascadeRound> advance(SimState& state, const Network& net, const SimConfig& cfg) {
    charge(state, net, cfg);
    return resolve_cascade(state, net, cfg);
}

SimState step(SimState state, const Network& net, const SimConfig& cfg) {
    (void)advance(state, net, cfg);
    return state;
}

SpikeTrace simulate(const Network& net, const SimConfig& cfg, StepObserver* observer) {
    cfg.validate();
    SpikeTrace trace;
    SimState state = SimState::initial(net.n());
    const Index total = cfg.steps();

    for (Index s = 0; s < total; ++s) {
        charge(state, net, cfg);
        if (observer) observer->after_charge(state);
        const auto rounds = resolve_cascade(state, net, cfg);
        for (const auto& round : rounds)
            for (const auto& e : round) trace.events.push_back({state.t, e.neuron, e.sign});
        if (observer) observer->after_step(state, rounds);
        if (state.step_index % cfg.probe_stride == 0 || s + 1 == total) {
            Snapshot snap{state.t, state.u, firing_rate(state, net.spike_strength), std::nullopt};
            if (observer) observer->on_probe(state, snap);
            trace.snapshots.push_back(std::move(snap));
        }
    }
    trace.final_state = std::move(state);
    return trace;
}

Vector firing_rate(const SimState& state, double alpha) { return firing_rate(state, alpha, state.t); }

Vector firing_rate(const SimState& state, double alpha, double t) {
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "firing rate needs t > 0");
    Vector x(state.k_pos.size());
    for (Index i = 0; i < x.size(); ++i) {
        x[i] = alpha * static_cast<double>(state.k_pos[i] - state.k_neg[i]) / t;
    }
    return x;
}

Vector firing_rate(const SpikeTrace& trace, Index n, double alpha, double t) {
    if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "firing rate needs t > 0");
    std::vector<std::int64_t> net(n, 0);
    for (const auto& e : trace.events) {
        if (e.time > t) break;
        if (e.neuron >= n) throw Error(ErrorKind::OutOfRange, "event neuron index out of range");
        net[e.neuron] += e.sign;
    }
    Vector x(n);
    for (Index i = 0; i < n; ++i) x[i] = alpha * static_cast<double>(net[i]) / t;
    return x;
}

}  // namespace spikeopt
