#pragma once

// The dual state v in R^m tracked alongside a primal run: v drifts by b * dt and
// jumps by -alpha * A_j for every spike of neuron j, so that u = A^T v holds.

#include <span>
#include <vector>

#include "spikeopt/numerics.hpp"
#include "spikeopt/problem.hpp"
#include "spikeopt/snn_sim.hpp"

namespace spikeopt {

struct DualState {
    Vector v;
    double t = 0.0;

    [[nodiscard]] static DualState initial(Index m);
};

/// Column index and sign for a neuron of a network with n or 2n neurons. Neurons
/// n..2n-1 of a doubled network act through -A_{j-n}.
struct NeuronColumn {
    Index column = 0;
    double sign = 1.0;
};
[[nodiscard]] NeuronColumn neuron_column(Index neuron, Index n);

void dual_charge(DualState& dual, const ProblemInstance& instance, double dt);
void dual_apply_round(DualState& dual, const ProblemInstance& instance, const CascadeRound& round,
                      double alpha);

[[nodiscard]] DualState dual_step(DualState dual, const ProblemInstance& instance,
                                  std::span<const CascadeRound> rounds, double alpha, double dt);

/// ||u - A^T v||_inf. For a doubled network u has 2n entries and is compared
/// against (A^T v, -A^T v).
[[nodiscard]] double consistency_gap(std::span<const double> u, std::span<const double> v,
                                     const DenseMatrix& a);

struct WallQuery {
    /// Signed 1-based wall index; -i denotes the wall of -A_i.
    long wall = 0;
    /// eta - A_j^T v
    double slack = 0.0;
};

/// Slack of every wall; two-sided networks see walls +-1..+-n, one-sided only +1..+n.
[[nodiscard]] std::vector<WallQuery> wall_slacks(std::span<const double> v,
                                                 const ProblemInstance& instance, double eta,
                                                 Sidedness side = Sidedness::TwoSided);

/// Walls j with A_j^T v > eta, ordered by index magnitude then sign.
[[nodiscard]] std::vector<long> violated_walls(std::span<const double> v,
                                               const ProblemInstance& instance, double eta,
                                               Sidedness side = Sidedness::TwoSided);

[[nodiscard]] double dual_objective(std::span<const double> v, std::span<const double> b);

/// Observer for coupled primal/dual runs.
class DualObserver {
public:
    virtual ~DualObserver() = default;
    /// After charging, before the cascade.
    virtual void after_charge(const SimState& /*state*/, const DualState& /*dual*/) {}
    virtual void after_step(const SimState& /*state*/, std::span<const CascadeRound> /*rounds*/,
                            const DualState& /*dual*/) {}
    virtual void on_probe(const SimState& /*state*/, const DualState& /*dual*/, Snapshot& /*snap*/) {}
};

struct CoupledTrace {
    SpikeTrace trace;
    DualState dual;
    /// Max over probes of ||u - A^T v||_inf.
    double max_consistency_gap = 0.0;
    /// Max over probes of ||v - t (b - A x(t))||_inf.
    double max_identity_gap = 0.0;
};

/// Signed solution estimate of a run (folded for doubled networks).
[[nodiscard]] Vector signed_rates(const SimState& state, const Network& net, Index n);

/// Runs net (built from instance, possibly doubled) and maintains v incrementally.
/// Snapshots carry v.
[[nodiscard]] CoupledTrace simulate_with_dual(const ProblemInstance& instance, const Network& net,
                                              const SimConfig& cfg, DualObserver* observer = nullptr);

}  // namespace spikeopt
