#include "spikeopt/coupling_diag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "spikeopt/combinatorics.hpp"
#include "spikeopt/error.hpp"
#include "spikeopt/oracles.hpp"

namespace spikeopt {

namespace {

DenseMatrix signed_columns(const ProblemInstance& instance, std::span<const long> walls) {
    std::vector<Vector> cols;
    cols.reserve(walls.size());
    for (long w : walls) cols.push_back(instance.signed_column(w));
    return DenseMatrix::from_columns(cols, instance.m());
}

/// z with A_S^T (v - A_S z) = level * 1, or nullopt when A_S is rank deficient.
std::optional<Vector> wall_coordinates(const DenseMatrix& as, std::span<const double> v, double level) {
    const Index k = as.cols();
    if (k == 0) return Vector{};
    if (numerical_rank(as, 1e-10) < k) return std::nullopt;
    Vector rhs = multiply_transposed(as, v);
    for (double& r : rhs) r -= level;
    return least_squares_solve(gram(as), rhs);
}

double distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

double max_abs_diff(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (Index i = 0; i < x.size(); ++i) s = std::max(s, std::abs(x[i] - y[i]));
    return s;
}

bool has_opposite_pair(std::span<const long> walls) {
    for (Index i = 0; i < walls.size(); ++i)
        for (Index j = i + 1; j < walls.size(); ++j)
            if (walls[i] == -walls[j]) return true;
    return false;
}

/// The point and coordinates for a wall set when it satisfies every invariant.
std::optional<IdealPoint> try_wall_set(std::span<const double> v, const ProblemInstance& instance,
                                       const CouplingConfig& cfg, const std::vector<long>& walls, double tol) {
    if (has_opposite_pair(walls)) return std::nullopt;
    const double level = cfg.level();
    const DenseMatrix as = signed_columns(instance, walls);
    const auto z = wall_coordinates(as, v, level);
    if (!z) return std::nullopt;
    if (std::any_of(z->begin(), z->end(), [tol](double c) { return c < -tol; })) return std::nullopt;
    Vector vi(v.begin(), v.end());
    for (Index q = 0; q < walls.size(); ++q) axpy(-(*z)[q], as.column(q), vi);
    // feasible, and the walls touching vi are exactly the chosen ones
    const Vector atv = multiply_transposed(instance.a, vi);
    const bool two = cfg.sidedness == Sidedness::TwoSided;
    for (Index j = 0; j < atv.size(); ++j) {
        const long idx = static_cast<long>(j) + 1;
        for (int sgn : {1, -1}) {
            if (sgn < 0 && !two) continue;
            const double slack = level - sgn * atv[j];
            const bool chosen = std::find(walls.begin(), walls.end(), sgn * idx) != walls.end();
            if (slack < -tol) return std::nullopt;
            if (!chosen && slack <= tol) return std::nullopt;
        }
    }
    IdealPoint ip;
    ip.v_ideal = std::move(vi);
    ip.gamma_set = walls;
    ip.cone_coords = *z;
    return ip;
}

struct Attempt {
    IdealPoint point;
    bool found = false;
};

Attempt search_cells(std::span<const double> v, const ProblemInstance& instance, const CouplingConfig& cfg,
                     const std::vector<long>& pool, double tol) {
    Attempt out;
    Index examined = 0, accepted = 0;
    const Index max_size = std::min(instance.m(), pool.size());
    std::vector<long> walls;
    for (Index k = 0; k <= max_size; ++k) {
        for_each_combination(pool.size(), k, [&](const std::vector<Index>& pick) {
            walls.clear();
            for (Index p : pick) walls.push_back(pool[p]);
            if (has_opposite_pair(walls)) return true;
            ++examined;
            auto ip = try_wall_set(v, instance, cfg, walls, tol);
            if (!ip) return true;
            ++accepted;
            if (!out.found) {
                out.found = true;
                out.point = std::move(*ip);
            }
            return true;
        });
    }
    out.point.candidates_examined = examined;
    out.point.candidates_accepted = accepted;
    return out;
}

}  // namespace

void CouplingConfig::validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must lie in (0, 1)");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorKind::InvalidArgument, "eta must be positive");
    if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
    if (candidate_cap == 0) throw Error(ErrorKind::InvalidArgument, "candidate cap must be positive");
}

AuxiliaryBank AuxiliaryBank::initial(Index m) {
    AuxiliaryBank bank;
    if (m > 1) bank.aux.assign(m - 1, Vector(m, 0.0));
    return bank;
}

IdealPoint ideal_decompose(std::span<const double> v, const ProblemInstance& instance, const CouplingConfig& cfg,
                           const std::vector<long>* hint) {
    cfg.validate();
    if (v.size() != instance.m()) throw Error(ErrorKind::DimensionMismatch, "dual point must have m entries");
    const double level = cfg.level();
    const double tol = cfg.tolerance * std::max({1.0, level, norm2(v)});
    if (hint) {
        if (auto ip = try_wall_set(v, instance, cfg, *hint, tol)) {
            ip->candidates_examined = 1;
            ip->candidates_accepted = 1;
            return std::move(*ip);
        }
    }
    const Vector atv = multiply_transposed(instance.a, v);
    const double top = std::max(norm_inf(atv), 0.0);
    // c v lies in the polytope, so ||v - proj(v)|| <= (1 - c) ||v|| and every wall
    // active at the projection has A_j^T v at least level - ||A_j|| (1 - c) ||v||.
    const double c = top > level ? level / top : 1.0;
    const double reach = (1.0 - c) * norm2(v);

    std::vector<long> pool;
    for (Index j = 0; j < instance.n(); ++j) {
        const double len = norm2(instance.a.column(j));
        const long idx = static_cast<long>(j) + 1;
        if (atv[j] >= level - len * reach - tol) pool.push_back(idx);
        if (cfg.sidedness == Sidedness::TwoSided && -atv[j] >= level - len * reach - tol) pool.push_back(-idx);
    }
    double total = 0.0;
    for (Index k = 0; k <= std::min(instance.m(), pool.size()); ++k) total += binomial(pool.size(), k);
    if (total > static_cast<double>(cfg.candidate_cap)) {
        throw Error(ErrorKind::CapExceeded, "too many candidate wall sets for the ideal decomposition");
    }

    for (double scale : {1.0, 1e3}) {
        Attempt a = search_cells(v, instance, cfg, pool, tol * scale);
        if (a.found) return std::move(a.point);
    }
    throw Error(ErrorKind::Degeneracy, "no consistent wall set for the ideal decomposition");
}

IdealSolution ideal_solution(const IdealPoint& ip, const ProblemInstance& instance, const CouplingConfig& cfg) {
    IdealSolution out;
    out.x_ideal.assign(instance.n(), 0.0);
    out.ax.assign(instance.m(), 0.0);
    if (ip.gamma_set.empty()) return out;
    const DenseMatrix as = signed_columns(instance, ip.gamma_set);
    if (as.is_zero()) return out;
    const Vector y = nnls_solve(as, instance.b).x_opt;
    for (Index k = 0; k < y.size(); ++k) {
        if (!(y[k] > cfg.tolerance)) continue;
        const long w = ip.gamma_set[k];
        const Index col = static_cast<Index>(std::labs(w)) - 1;
        out.x_ideal[col] += w > 0 ? y[k] : -y[k];
        out.super_set.push_back(w);
        axpy(y[k], as.column(k), out.ax);
    }
    return out;
}

SuperPoint super_point(std::span<const double> v, std::span<const long> super_set, const ProblemInstance& instance,
                       const CouplingConfig& cfg) {
    if (v.size() != instance.m()) throw Error(ErrorKind::DimensionMismatch, "dual point must have m entries");
    const DenseMatrix as = signed_columns(instance, super_set);
    const auto z = wall_coordinates(as, v, cfg.level());
    if (!z) throw Error(ErrorKind::Degeneracy, "super set columns are linearly dependent");
    SuperPoint out{Vector(v.begin(), v.end()), *z};
    for (Index q = 0; q < super_set.size(); ++q) axpy(-(*z)[q], as.column(q), out.v_super);
    return out;
}

std::optional<AuxiliaryReset> auxiliary_update(AuxiliaryBank& bank, Index prev_super_size, Index new_super_size,
                                               std::span<const double> residual,
                                               const std::function<Vector()>& super_now, double dt) {
    const Index d = new_super_size;
    if (d == 0 || d > bank.aux.size()) return std::nullopt;
    Vector& slot = bank.aux[d - 1];
    if (prev_super_size == d) {
        axpy(dt, residual, slot);
        return std::nullopt;
    }
    AuxiliaryReset reset{d, slot, super_now()};
    slot = reset.after;
    return reset;
}

double potential(const IdealPoint& ip, const AuxiliaryBank& bank, std::span<const double> b) {
    double p = dot(b, ip.v_ideal);
    for (const auto& a : bank.aux) p += dot(b, a);
    return p;
}

CouplingDiagnostics::CouplingDiagnostics(const ProblemInstance& instance, CouplingConfig cfg, double dt,
                                         double check_tolerance, bool keep_records)
    : instance_(instance), cfg_(cfg), dt_(dt), bank_(AuxiliaryBank::initial(instance.m())),
      keep_records_(keep_records), monitor_(instance, dt, check_tolerance) {
    cfg_.validate();
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const Vector zero(instance.m(), 0.0);
    const IdealPoint ip = ideal_decompose(zero, instance, cfg_);
    const IdealSolution& sol = solution_for(ip);
    cur_.v_ideal_charged = ip.v_ideal;
    cur_.gamma_charged = ip.gamma_set;
    cur_.v_ideal = ip.v_ideal;
    cur_.gamma = ip.gamma_set;
    cur_.x_ideal = sol.x_ideal;
    cur_.ax = sol.ax;
    cur_.super_size = sol.super_set.size();
    cur_.potential = potential(ip, bank_, instance.b);
    hint_ = ip.gamma_set;
    finish_record();
}

const IdealSolution& CouplingDiagnostics::solution_for(const IdealPoint& ip) {
    // b is fixed, so the restricted NNLS depends on the wall set alone
    auto it = solutions_.find(ip.gamma_set);
    if (it == solutions_.end()) it = solutions_.emplace(ip.gamma_set, ideal_solution(ip, instance_, cfg_)).first;
    return it->second;
}

void CouplingDiagnostics::finish_record() {
    monitor_.push(cur_);
    if (keep_records_) records_.push_back(cur_);
}

void CouplingDiagnostics::decompose(std::span<const double> v, const std::vector<long>& hint, IdealPoint& out) {
    auto it = factors_.find(hint);
    if (it == factors_.end()) {
        detail::WallFactor f;
        f.as = signed_columns(instance_, hint);
        const Index k = hint.size();
        f.full_rank = k == 0 || numerical_rank(f.as, 1e-10) == k;
        if (f.full_rank && k > 0) {
            const DenseMatrix g = gram(f.as);
            f.ginv = DenseMatrix(k, k);
            for (Index c = 0; c < k; ++c) {
                Vector e(k, 0.0);
                e[c] = 1.0;
                const Vector col = least_squares_solve(g, e);
                for (Index r = 0; r < k; ++r) f.ginv(r, c) = col[r];
            }
        }
        it = factors_.emplace(hint, std::move(f)).first;
    }
    const detail::WallFactor& f = it->second;
    const Index m = instance_.m();
    const Index n = instance_.n();
    const Index k = hint.size();
    const double level = cfg_.level();
    const double tol = cfg_.tolerance * std::max({1.0, level, norm2(v)});
    bool ok = f.full_rank && !has_opposite_pair(hint);
    if (ok) {
        work_rhs_.assign(k, -level);
        for (Index q = 0; q < k; ++q)
            for (Index i = 0; i < m; ++i) work_rhs_[q] += f.as(i, q) * v[i];
        work_z_.assign(k, 0.0);
        for (Index r = 0; r < k; ++r) {
            for (Index c = 0; c < k; ++c) work_z_[r] += f.ginv(r, c) * work_rhs_[c];
            if (work_z_[r] < -tol) ok = false;
        }
    }
    if (ok) {
        work_v_.assign(v.begin(), v.end());
        for (Index q = 0; q < k; ++q)
            for (Index i = 0; i < m; ++i) work_v_[i] -= work_z_[q] * f.as(i, q);
        const bool two = cfg_.sidedness == Sidedness::TwoSided;
        work_atv_.assign(n, 0.0);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) work_atv_[j] += instance_.a(i, j) * work_v_[i];
        for (Index j = 0; j < n && ok; ++j) {
            const long idx = static_cast<long>(j) + 1;
            for (int sgn : {1, -1}) {
                if (sgn < 0 && !two) continue;
                const double slack = level - sgn * work_atv_[j];
                const bool chosen = std::find(hint.begin(), hint.end(), sgn * idx) != hint.end();
                if (slack < -tol || (!chosen && slack <= tol)) ok = false;
            }
        }
    }
    if (ok) {
        out.v_ideal = work_v_;
        out.gamma_set = hint;
        out.cone_coords = work_z_;
        out.candidates_examined = 1;
        out.candidates_accepted = 1;
        return;
    }
    out = ideal_decompose(v, instance_, cfg_);
}

void CouplingDiagnostics::after_charge(const SimState& /*state*/, const DualState& dual) {
    v_charged_ = dual.v;
    decompose(v_charged_, hint_, ip_charged_);
}

void CouplingDiagnostics::after_step(const SimState& state, std::span<const CascadeRound> rounds,
                                     const DualState& dual) {
    const Index prev_super = cur_.super_size;
    residual_.assign(instance_.b.begin(), instance_.b.end());
    for (Index i = 0; i < residual_.size(); ++i) residual_[i] -= cur_.ax[i];

    cur_.t = state.t;
    cur_.spikes = 0;
    cur_.foreign_spikes = 0;
    const auto& active = ip_charged_.gamma_set;
    for (const auto& round : rounds) {
        for (const auto& e : round) {
            ++cur_.spikes;
            const auto col = neuron_column(e.neuron, instance_.n());
            const long wall = static_cast<long>(col.sign * e.sign) * (static_cast<long>(col.column) + 1);
            if (std::find(active.begin(), active.end(), wall) == active.end()) ++cur_.foreign_spikes;
        }
    }
    if (cur_.spikes > 0) {
        decompose(dual.v, ip_charged_.gamma_set, ip_post_);
    } else {
        ip_post_ = ip_charged_;
    }
    const IdealPoint& ip = ip_post_;
    const IdealSolution& sol = solution_for(ip);

    const auto reset = auxiliary_update(
        bank_, prev_super, sol.super_set.size(), residual_,
        [&] { return super_point(dual.v, sol.super_set, instance_, cfg_).v_super; }, dt_);
    cur_.aux_jump.reset();
    cur_.aux_jump_d = 0;
    if (reset) {
        cur_.aux_jump = dot(instance_.b, subtract(reset->after, reset->before));
        cur_.aux_jump_d = reset->d;
    }

    cur_.dist_charged = distance(v_charged_, ip_charged_.v_ideal);
    cur_.dist_post = distance(dual.v, ip.v_ideal);
    cur_.v_ideal_charged = ip_charged_.v_ideal;
    cur_.gamma_charged = ip_charged_.gamma_set;
    cur_.potential = potential(ip, bank_, instance_.b);
    cur_.v_ideal = ip.v_ideal;
    cur_.gamma = ip.gamma_set;
    cur_.x_ideal = sol.x_ideal;
    cur_.ax = sol.ax;
    cur_.super_size = sol.super_set.size();
    hint_ = ip.gamma_set;
    finish_record();
}

bool LemmaReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second.pass; });
}

namespace {

void observe(CheckResult& c, double violation, double t, double tol) {
    ++c.evaluated;
    if (violation > c.worst_violation) {
        c.worst_violation = violation;
        c.at_time = t;
    }
    if (!(violation <= tol)) c.pass = false;
}

}  // namespace

LemmaMonitor::LemmaMonitor(const ProblemInstance& instance, double dt, double tolerance)
    : instance_(instance), dt_(dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    rep_.tolerance = tolerance;
}

void LemmaMonitor::push(const DiagnosticRecord& r) {
    const Index m = instance_.m();
    if (r.v_ideal.size() != m || r.v_ideal_charged.size() != m || r.ax.size() != m ||
        r.x_ideal.size() != instance_.n()) {
        throw Error(ErrorKind::MissingDiagnostics, "diagnostic record is incomplete");
    }
    const double tol = rep_.tolerance;
    const Vector& b = instance_.b;
    double bax = 0.0, axax = 0.0, bb = 0.0, rr = 0.0;
    for (Index i = 0; i < m; ++i) {
        bax += b[i] * r.ax[i];
        axax += r.ax[i] * r.ax[i];
        bb += b[i] * b[i];
        rr += (b[i] - r.ax[i]) * (b[i] - r.ax[i]);
    }
    observe(checks_[4], std::max(std::abs(bax - axax), std::abs(rr - (bb - axax))),
            r.t, tol);

    if (pushed_ > 0) {
        const auto& p = prev_;
        ++rep_.steps;
        rep_.spikes += r.spikes;
        rep_.spikes_outside_active_set += r.foreign_spikes;
        if (r.spikes > 0) {
            observe(checks_[0], max_abs_diff(r.v_ideal_charged, r.v_ideal), r.t, tol);
            observe(rep_.distance_contraction, std::max(0.0, r.dist_post - r.dist_charged), r.t, tol);
        }
        // The charging half of every step is spike-free.
        if (r.gamma_charged == p.gamma) {
            auto it = free_drift_.find(p.gamma);
            if (it == free_drift_.end()) {
                const Vector proj = project_onto_columns(signed_columns(instance_, p.gamma), b);
                it = free_drift_.emplace(p.gamma, subtract(b, proj)).first;
            }
            double worst = 0.0;
            for (Index i = 0; i < m; ++i) {
                const double moved = r.v_ideal_charged[i] - p.v_ideal[i];
                worst = std::max(worst, std::abs(moved - it->second[i] * dt_));
            }
            observe(checks_[1], worst, r.t, tol);
        }
        if (r.aux_jump) observe(checks_[2], std::max(0.0, -*r.aux_jump), r.t, tol);

        double gain = 0.0, prr = 0.0, paxax = 0.0;
        for (Index i = 0; i < m; ++i) {
            gain += b[i] * (b[i] - p.ax[i]);
            prr += (b[i] - p.ax[i]) * (b[i] - p.ax[i]);
            paxax += p.ax[i] * p.ax[i];
        }
        // A super-set size change with no slot to reset (into 0 or m) is not tracked
        // by the potential, so those steps are drift-only and skipped.
        if (r.super_size == p.super_size || r.aux_jump)
            observe(checks_[3], std::max(0.0, gain * dt_ - (r.potential - p.potential)), r.t, tol);
        const double grew = std::sqrt(rr) - std::sqrt(prr);
        const double shrank = std::sqrt(paxax) - std::sqrt(axax);
        observe(checks_[5], std::max({0.0, grew, shrank}), r.t, tol);
    }
    prev_ = r;
    ++pushed_;
}

LemmaReport LemmaMonitor::report() const {
    if (pushed_ == 0) throw Error(ErrorKind::MissingDiagnostics, "no coupling diagnostics recorded");
    LemmaReport out = rep_;
    for (Index i = 0; i < checks_.size(); ++i) out.checks[kLemmaCheckNames[i]] = checks_[i];
    return out;
}

LemmaReport check_lemma_suite(std::span<const DiagnosticRecord> records, const ProblemInstance& instance,
                              double dt, double tolerance) {
    if (records.empty()) throw Error(ErrorKind::MissingDiagnostics, "no coupling diagnostics recorded");
    LemmaMonitor monitor(instance, dt, tolerance);
    for (const auto& r : records) monitor.push(r);
    return monitor.report();
}

}  // namespace spikeopt
