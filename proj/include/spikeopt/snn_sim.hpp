#pragma once

// Discrete-time integrate-and-fire engine. A step charges every neuron with its
// input current, then resolves spikes in synchronous cascade rounds until no
// neuron sits above threshold.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikeopt/numerics.hpp"
#include "spikeopt/problem.hpp"

namespace spikeopt {

enum class Sidedness { OneSided, TwoSided };

/// Static network. A spike of neuron j with sign s changes u_i by
/// -spike_strength * connectivity(j, i) * s.
struct Network {
    DenseMatrix connectivity;
    Vector input_current;
    Sidedness sidedness = Sidedness::OneSided;
    double spike_strength = 1.0;
    double threshold = 1.0;

    Network() = default;
    Network(DenseMatrix c, Vector current, Sidedness side, double alpha, double eta);

    [[nodiscard]] Index n() const noexcept { return input_current.size(); }
};

struct SimConfig {
    double dt = 0.01;
    double horizon = 1.0;
    /// Maximum cascade rounds per step; 0 means 10 * n.
    Index cascade_cap = 0;
    Index probe_stride = 1;
    /// Neurons fire once u exceeds threshold * (1 - relative_threshold_slack). The slack
    /// absorbs round-off in accumulated charging (ten steps of 0.1 sum to 0.99999...).
    double relative_threshold_slack = 1e-9;

    void validate() const;
    [[nodiscard]] Index steps() const;
    [[nodiscard]] Index effective_cascade_cap(Index n) const noexcept {
        return cascade_cap == 0 ? 10 * n : cascade_cap;
    }
};

struct SimState {
    Index step_index = 0;
    double t = 0.0;
    Vector u;
    std::vector<std::int64_t> k_pos;
    std::vector<std::int64_t> k_neg;

    [[nodiscard]] static SimState initial(Index n);
};

struct SpikeEvent {
    Index neuron = 0;
    int sign = 1;
    friend bool operator==(const SpikeEvent&, const SpikeEvent&) = default;
};

/// Neurons that fired together in one synchronous round, positive spikes first.
using CascadeRound = std::vector<SpikeEvent>;

struct EventRecord {
    double time = 0.0;
    Index neuron = 0;
    int sign = 1;
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct Snapshot {
    double time = 0.0;
    Vector u;
    Vector x;
    std::optional<Vector> v;
};

struct SpikeTrace {
    std::vector<EventRecord> events;
    std::vector<Snapshot> snapshots;
    SimState final_state;
};

/// C = A^T A, I = A^T b.
[[nodiscard]] Network build_network(const ProblemInstance& instance, Sidedness side, double alpha,
                                    double eta);

/// 2n-neuron one-sided network with C' = [[C, -C], [-C, C]] and I' = (I, -I).
[[nodiscard]] Network two_sided_to_one_sided(const Network& net);

/// Folds firing rates of a doubled network back into n signed rates x_i - x_{i+n}.
[[nodiscard]] Vector fold_doubled_rates(std::span<const double> x);

/// Adds I * dt to the potentials and advances the clock.
void charge(SimState& state, const Network& net, const SimConfig& cfg);

/// Fires until quiescent. Throws Divergence when the round count exceeds the cap.
std::vector<CascadeRound> resolve_cascade(SimState& state, const Network& net, const SimConfig& cfg);

/// charge followed by resolve_cascade.
std::vector<CascadeRound> advance(SimState& state, const Network& net, const SimConfig& cfg);

[[nodiscard]] SimState step(SimState state, const Network& net, const SimConfig& cfg);

/// Hooks invoked by simulate. Observers must not modify the simulation.
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void after_charge(const SimState& /*state*/) {}
    virtual void after_step(const SimState& /*state*/, std::span<const CascadeRound> /*rounds*/) {}
    /// Called every probe_stride steps (and at the last step); may attach payloads.
    virtual void on_probe(const SimState& /*state*/, Snapshot& /*snapshot*/) {}
};

[[nodiscard]] SpikeTrace simulate(const Network& net, const SimConfig& cfg,
                                  StepObserver* observer = nullptr);

/// x_i = alpha * (k_pos_i - k_neg_i) / t.
[[nodiscard]] Vector firing_rate(const SimState& state, double alpha);
[[nodiscard]] Vector firing_rate(const SimState& state, double alpha, double t);

/// Firing rates recomputed from the event log over [0, t].
[[nodiscard]] Vector firing_rate(const SpikeTrace& trace, Index n, double alpha, double t);

}  // namespace spikeopt
