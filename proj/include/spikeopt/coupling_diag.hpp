#pragma once

// Runtime diagnostics for the dual state: the ideal point (projection of v onto
// the shrunken polytope {w : A_j^T w <= (1 - tau) eta}), the restricted NNLS
// solution on its active walls, the super point, the auxiliary bank, the
// potential, and checks of the structural properties along a run.

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikeopt/dual_view.hpp"
#include "spikeopt/numerics.hpp"
#include "spikeopt/problem.hpp"
#include "spikeopt/snn_sim.hpp"

namespace spikeopt {

struct CouplingConfig {
    double tau = 0.1;
    double tolerance = 1e-9;
    double eta = 1.0;
    /// Two-sided networks see walls +-j, one-sided only +j.
    Sidedness sidedness = Sidedness::TwoSided;
    Index candidate_cap = Index{1} << 15;

    void validate() const;
    [[nodiscard]] double level() const noexcept { return (1.0 - tau) * eta; }
};

struct IdealPoint {
    Vector v_ideal;
    /// Active walls, signed 1-based, sorted by magnitude.
    std::vector<long> gamma_set;
    /// Cone coordinates aligned with gamma_set.
    Vector cone_coords;
    Index candidates_examined = 0;
    Index candidates_accepted = 0;
};

struct IdealSolution {
    /// n entries; coordinate |j| - 1 carries sign(j) * weight for j in the active set.
    Vector x_ideal;
    /// Active walls with nonzero weight.
    std::vector<long> super_set;
    Vector ax;
};

struct SuperPoint {
    Vector v_super;
    Vector z;
};

struct AuxiliaryBank {
    /// aux[d - 1] for d = 1..m-1.
    std::vector<Vector> aux;

    [[nodiscard]] static AuxiliaryBank initial(Index m);
};

struct AuxiliaryReset {
    Index d = 0;
    Vector before;
    Vector after;
};

/// Unique decomposition v = v_ideal + sum_{j in Gamma} z_j A_j with z >= 0.
/// Throws Degeneracy when no candidate set is consistent and CapExceeded when
/// the candidate count exceeds cfg.candidate_cap.
/// A hint (typically the previous step's active set) is tried first and accepted
/// when it satisfies every invariant, which is what full enumeration would return.
[[nodiscard]] IdealPoint ideal_decompose(std::span<const double> v, const ProblemInstance& instance,
                                         const CouplingConfig& cfg, const std::vector<long>* hint = nullptr);

/// NNLS of b over the signed active columns, weights below cfg.tolerance dropped
/// from the super set.
[[nodiscard]] IdealSolution ideal_solution(const IdealPoint& ip, const ProblemInstance& instance,
                                           const CouplingConfig& cfg);

/// Solves v' = v - A_S z with A_j^T v' = (1 - tau) eta for j in S. Throws
/// Degeneracy when A_S is rank deficient.
[[nodiscard]] SuperPoint super_point(std::span<const double> v, std::span<const long> super_set,
                                     const ProblemInstance& instance, const CouplingConfig& cfg);

/// One step of the three-case update. residual is b - A x_ideal at the previous
/// step; super_now is evaluated only when a reset happens.
std::optional<AuxiliaryReset> auxiliary_update(AuxiliaryBank& bank, Index prev_super_size,
                                               Index new_super_size, std::span<const double> residual,
                                               const std::function<Vector()>& super_now, double dt);

/// b^T (v_ideal + sum_d aux_d)
[[nodiscard]] double potential(const IdealPoint& ip, const AuxiliaryBank& bank, std::span<const double> b);

/// Per-step diagnostic state. Entry 0 describes t = 0.
struct DiagnosticRecord {
    double t = 0.0;
    Index spikes = 0;
    Vector v_ideal_charged;
    std::vector<long> gamma_charged;
    Vector v_ideal;
    std::vector<long> gamma;
    Vector x_ideal;
    Vector ax;
    Index super_size = 0;
    double potential = 0.0;
    std::optional<double> aux_jump;  ///< b^T (after - before) on a reset
    Index aux_jump_d = 0;
    double dist_charged = 0.0;  ///< ||v_charged - v_ideal_charged||
    double dist_post = 0.0;     ///< ||v - v_ideal||
    /// Spikes through walls not active at the charged ideal point.
    Index foreign_spikes = 0;
};

struct CheckResult {
    bool pass = true;
    double worst_violation = 0.0;
    double at_time = 0.0;
    Index evaluated = 0;
};

struct LemmaReport {
    /// Keys: ideal_unchanged_by_spikes, ideal_drift, auxiliary_jump,
    /// potential_improvement, ideal_solution_identities, residual_monotonicity.
    std::map<std::string, CheckResult> checks;
    /// Informational: ||v - v_ideal|| across cascades.
    CheckResult distance_contraction;
    /// Informational: spikes whose wall was not in the active set.
    Index spikes_outside_active_set = 0;
    Index spikes = 0;
    double tolerance = 0.0;
    Index steps = 0;

    [[nodiscard]] bool all_pass() const;
};

inline const std::vector<std::string> kLemmaCheckNames{
    "ideal_unchanged_by_spikes", "ideal_drift",       "auxiliary_jump",
    "potential_improvement",     "ideal_solution_identities", "residual_monotonicity"};

/// Streaming evaluation of the six properties; records are pushed in time order.
class LemmaMonitor {
public:
    LemmaMonitor(const ProblemInstance& instance, double dt, double tolerance);

    void push(const DiagnosticRecord& r);
    /// Throws MissingDiagnostics when nothing was pushed.
    [[nodiscard]] LemmaReport report() const;

private:
    const ProblemInstance& instance_;
    double dt_;
    LemmaReport rep_;
    /// Same order as kLemmaCheckNames; copied into rep_.checks by report().
    std::array<CheckResult, 6> checks_{};
    DiagnosticRecord prev_;
    Index pushed_ = 0;
    std::map<std::vector<long>, Vector> free_drift_;
};

namespace detail {
/// Cached solve data for one wall set: z = ginv (A_S^T v - level 1).
struct WallFactor {
    DenseMatrix as;
    DenseMatrix ginv;
    bool full_rank = false;
};
}  // namespace detail

/// Observer that builds a record for every step of a coupled run and feeds it to
/// a LemmaMonitor. Records are kept only when keep_records is set.
class CouplingDiagnostics final : public DualObserver {
public:
    CouplingDiagnostics(const ProblemInstance& instance, CouplingConfig cfg, double dt,
                        double check_tolerance = 1e-6, bool keep_records = true);

    void after_charge(const SimState& state, const DualState& dual) override;
    void after_step(const SimState& state, std::span<const CascadeRound> rounds, const DualState& dual) override;

    [[nodiscard]] const std::vector<DiagnosticRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const AuxiliaryBank& bank() const noexcept { return bank_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }
    [[nodiscard]] const CouplingConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] LemmaReport report() const { return monitor_.report(); }
    [[nodiscard]] const DiagnosticRecord& last() const noexcept { return cur_; }

private:
    const IdealSolution& solution_for(const IdealPoint& ip);
    /// Tries the wall set `hint` through its cached factor before full enumeration.
    void decompose(std::span<const double> v, const std::vector<long>& hint, IdealPoint& out);
    void finish_record();

    const ProblemInstance& instance_;
    CouplingConfig cfg_;
    double dt_;
    AuxiliaryBank bank_;
    bool keep_records_;
    LemmaMonitor monitor_;
    std::vector<DiagnosticRecord> records_;
    DiagnosticRecord cur_;
    Vector v_charged_;
    IdealPoint ip_charged_;
    IdealPoint ip_post_;
    Vector residual_;
    std::vector<long> hint_;
    std::map<std::vector<long>, IdealSolution> solutions_;
    std::map<std::vector<long>, detail::WallFactor> factors_;
    Vector work_z_, work_rhs_, work_atv_, work_v_;
};

/// Evaluates the six properties over stored records. Throws MissingDiagnostics
/// when records are empty or incomplete.
[[nodiscard]] LemmaReport check_lemma_suite(std::span<const DiagnosticRecord> records,
                                            const ProblemInstance& instance, double dt, double tolerance);

}  // namespace spikeopt
