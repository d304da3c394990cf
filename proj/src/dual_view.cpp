#include "spikeopt/dual_view.hpp"

#include <algorithm>
#include <cmath>

#include "spikeopt/error.hpp"

namespace spikeopt {

DualState DualState::initial(Index m) { return DualState{Vector(m, 0.0), 0.0}; }

NeuronColumn neuron_column(Index neuron, Index n) {
    if (neuron < n) return {neuron, 1.0};
    if (neuron < 2 * n) return {neuron - n, -1.0};
    throw Error(ErrorKind::OutOfRange, "neuron index out of range for the instance");
}

void dual_charge(DualState& dual, const ProblemInstance& instance, double dt) {
    if (dual.v.size() != instance.m()) throw Error(ErrorKind::DimensionMismatch, "dual state size differs from m");
    for (Index i = 0; i < dual.v.size(); ++i) dual.v[i] += instance.b[i] * dt;
    dual.t += dt;
}

void dual_apply_round(DualState& dual, const ProblemInstance& instance, const CascadeRound& round,
                      double alpha) {
    const Index n = instance.n();
    for (const auto& e : round) {
        const auto col = neuron_column(e.neuron, n);
        const double s = col.sign * static_cast<double>(e.sign);
        for (Index i = 0; i < dual.v.size(); ++i) dual.v[i] -= alpha * instance.a(i, col.column) * s;
    }
}

DualState dual_step(DualState dual, const ProblemInstance& instance, std::span<const CascadeRound> rounds,
                    double alpha, double dt) {
    dual_charge(dual, instance, dt);
    for (const auto& round : rounds) dual_apply_round(dual, instance, round, alpha);
    return dual;
}

double consistency_gap(std::span<const double> u, std::span<const double> v, const DenseMatrix& a) {
    const Vector atv = multiply_transposed(a, v);
    const Index n = a.cols();
    if (u.size() != n && u.size() != 2 * n) {
        throw Error(ErrorKind::DimensionMismatch, "potential vector must have n or 2n entries");
    }
    double gap = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
        const double expected = i < n ? atv[i] : -atv[i - n];
        gap = std::max(gap, std::abs(u[i] - expected));
    }
    return gap;
}

std::vector<WallQuery> wall_slacks(std::span<const double> v, const ProblemInstance& instance, double eta,
                                   Sidedness side) {
    const Vector atv = multiply_transposed(instance.a, v);
    std::vector<WallQuery> out;
    for (Index i = 0; i < atv.size(); ++i) {
        const long idx = static_cast<long>(i) + 1;
        out.push_back({idx, eta - atv[i]});
        if (side == Sidedness::TwoSided) out.push_back({-idx, eta + atv[i]});
    }
    return out;
}

std::vector<long> violated_walls(std::span<const double> v, const ProblemInstance& instance, double eta,
                                 Sidedness side) {
    std::vector<long> out;
    for (const auto& w : wall_slacks(v, instance, eta, side))
        if (w.slack < 0.0) out.push_back(w.wall);
    return out;
}

double dual_objective(std::span<const double> v, std::span<const double> b) { return dot(b, v); }

Vector signed_rates(const SimState& state, const Network& net, Index n) {
    const Vector x = firing_rate(state, net.spike_strength);
    if (net.n() == n) return x;
    if (net.n() == 2 * n) return fold_doubled_rates(x);
    throw Error(ErrorKind::DimensionMismatch, "network size is neither n nor 2n");
}

namespace {

class DualTracker final : public StepObserver {
public:
    DualTracker(const ProblemInstance& instance, const Network& net, const SimConfig& cfg, DualObserver* inner,
                CoupledTrace& out)
        : instance_(instance), net_(net), cfg_(cfg), inner_(inner), out_(out),
          dual_(DualState::initial(instance.m())) {}

    void after_charge(const SimState& state) override {
        dual_charge(dual_, instance_, cfg_.dt);
        dual_.t = state.t;
        if (inner_) inner_->after_charge(state, dual_);
    }

    void after_step(const SimState& state, std::span<const CascadeRound> rounds) override {
        for (const auto& round : rounds) dual_apply_round(dual_, instance_, round, net_.spike_strength);
        if (inner_) inner_->after_step(state, rounds, dual_);
    }

    void on_probe(const SimState& state, Snapshot& snap) override {
        snap.v = dual_.v;
        out_.max_consistency_gap =
            std::max(out_.max_consistency_gap, consistency_gap(state.u, dual_.v, instance_.a));
        const Vector x = signed_rates(state, net_, instance_.n());
        const Vector expected = scaled(subtract(instance_.b, multiply(instance_.a, x)), state.t);
        out_.max_identity_gap = std::max(out_.max_identity_gap, norm_inf(subtract(dual_.v, expected)));
        if (inner_) inner_->on_probe(state, dual_, snap);
    }

    [[nodiscard]] DualState take() { return std::move(dual_); }

private:
    const ProblemInstance& instance_;
    const Network& net_;
    const SimConfig& cfg_;
    DualObserver* inner_;
    CoupledTrace& out_;
    DualState dual_;
};

}  // namespace

CoupledTrace simulate_with_dual(const ProblemInstance& instance, const Network& net, const SimConfig& cfg,
                                DualObserver* observer) {
    if (net.n() != instance.n() && net.n() != 2 * instance.n()) {
        throw Error(ErrorKind::DimensionMismatch, "network does not match the instance");
    }
    CoupledTrace out;
    DualTracker tracker(instance, net, cfg, observer, out);
    out.trace = simulate(net, cfg, &tracker);
    out.dual = tracker.take();
    return out;
}

}  // namespace spikeopt
