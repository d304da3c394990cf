#pragma once

// Command-line front end: run configuration, the solve / verify / gamma / bench
// commands and their artifacts. Commands return process exit codes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spikeopt/io.hpp"
#include "spikeopt/problem.hpp"
#include "spikeopt/snn_sim.hpp"

namespace spikeopt {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitParse = 2,
    kExitDivergence = 3,
    kExitLemmaViolation = 4,
    kExitCapExceeded = 5,
};

struct InstancePaths {
    std::string a;
    std::string b;
};

struct RunConfig {
    std::string command;
    /// "nnls" (one-sided network) or "l1" (two-sided).
    std::string kind = "l1";
    std::string a_path;
    std::string b_path;
    /// Random instance rsm_instance(rsm_m, rsm_n, seed) when no files are given.
    Index rsm_m = 0;
    Index rsm_n = 0;
    std::uint64_t seed = 1;
    std::optional<double> alpha;
    std::optional<double> tau;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<Index> probe_stride;
    double eta = 1.0;
    double tolerance = 1e-6;
    Index cascade_cap = 0;
    std::string out_dir = ".";
    /// gamma: fail with kExitCapExceeded instead of falling back to sampling.
    bool exact = false;
    Index trials = 10000;
    std::optional<double> probe_tau;
    /// bench: explicit instances, otherwise `count` random ones from seed upward.
    std::vector<InstancePaths> instances;
    Index count = 10;
    unsigned workers = 0;

    /// Throws InvalidArgument.
    void validate() const;
};

/// Overlays keys of a JSON object onto cfg. Unknown keys and wrong types throw ParseError.
void apply_config_json(RunConfig& cfg, const Json& j, const std::string& source);
void apply_config_file(RunConfig& cfg, const std::string& path);

struct Recommendation {
    /// Niceness (exact when enumeration fits, otherwise a sampled upper bound).
    double gamma = 0.0;
    bool gamma_exact = false;
    double lambda_max = 0.0;
    /// min(0.1, gamma / (n^2 lambda_max^2))
    double tau_formula = 0.0;
    /// min(tau / m, tau * gamma) at the resolved tau.
    double alpha_bound = 0.0;
};

[[nodiscard]] Recommendation recommend(const ProblemInstance& instance, double tau, std::uint64_t seed);

/// Parameters after defaults are filled in.
struct ResolvedParams {
    double alpha = 0.0;
    double tau = 0.0;
    double eta = 1.0;
    double dt = 0.0;
    double horizon = 0.0;
    Index probe_stride = 1;
    Index cascade_cap = 0;
    Sidedness side = Sidedness::TwoSided;
};

/// Defaults: tau 0.1; alpha 0.01 for solve and bench, min(tau/m, tau gamma, tolerance)
/// for verify; dt = alpha / (4 max|I|); horizon 100 (verify 4); about 1000 probes.
[[nodiscard]] ResolvedParams resolve_params(const RunConfig& cfg, const ProblemInstance& instance,
                                            const Recommendation& rec);
[[nodiscard]] Json to_json(const ResolvedParams& p);

/// Instance named by the configuration together with a short description.
[[nodiscard]] std::pair<ProblemInstance, std::string> load_instance(const RunConfig& cfg);

int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_verify(const RunConfig& cfg, std::ostream& log);
int cmd_gamma(const RunConfig& cfg, std::ostream& log);
int cmd_bench(const RunConfig& cfg, std::ostream& log);

/// Full command line: parses flags, overlays --config, dispatches, maps errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace spikeopt
