#include "spikeopt/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <CLI11.hpp>

#include "spikeopt/coupling_diag.hpp"
#include "spikeopt/dual_view.hpp"
#include "spikeopt/error.hpp"
#include "spikeopt/niceness.hpp"
#include "spikeopt/oracles.hpp"

namespace spikeopt {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad_key(const std::string& source, const std::string& key, const std::string& why) {
    throw ParseError(source, 0, "config key '" + key + "': " + why);
}

double number_of(const Json& v, const std::string& source, const std::string& key) {
    if (!v.is_number()) bad_key(source, key, "expected a number");
    return v.get<double>();
}

Index count_of(const Json& v, const std::string& source, const std::string& key) {
    if (!v.is_number_unsigned()) bad_key(source, key, "expected a non-negative integer");
    return v.get<Index>();
}

std::string string_of(const Json& v, const std::string& source, const std::string& key) {
    if (!v.is_string()) bad_key(source, key, "expected a string");
    return v.get<std::string>();
}

ProblemKind problem_kind(const RunConfig& cfg) { return cfg.kind == "nnls" ? ProblemKind::Nnls : ProblemKind::L1; }

SimConfig sim_config(const ResolvedParams& p) {
    SimConfig sc;
    sc.dt = p.dt;
    sc.horizon = p.horizon;
    sc.cascade_cap = p.cascade_cap;
    sc.probe_stride = p.probe_stride;
    return sc;
}

Json header(const RunConfig& cfg, const std::string& desc, const ProblemInstance& inst) {
    Json j;
    j["command"] = cfg.command;
    j["kind"] = cfg.kind;
    j["seed"] = cfg.seed;
    j["instance"] = Json{{"source", desc}, {"m", inst.m()}, {"n", inst.n()}};
    return j;
}

Json to_json(const Recommendation& r) {
    Json j;
    j["gamma"] = json_number(r.gamma);
    j["gamma_exact"] = r.gamma_exact;
    j["lambda_max"] = json_number(r.lambda_max);
    j["tau_formula"] = json_number(r.tau_formula);
    j["alpha_bound"] = json_number(r.alpha_bound);
    return j;
}

/// Oracle solution for the configured kind; nullopt with a reason when unavailable.
std::optional<OracleSolution> try_oracle(const ProblemInstance& inst, ProblemKind kind, std::string& reason) {
    try {
        return kind == ProblemKind::Nnls ? nnls_solve(inst.a, inst.b) : l1_solve_enum(inst.a, inst.b);
    } catch (const Error& e) {
        reason = std::string(to_string(e.kind())) + ": " + e.what();
        return std::nullopt;
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::InvalidArgument, "cannot create output directory " + dir);
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_text(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    body(out);
}

std::string eps_key(double eps) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", eps);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    if (kind != "nnls" && kind != "l1") bad("kind must be nnls or l1");
    if (alpha && !(*alpha > 0.0)) bad("alpha must be positive");
    if (tau && !(*tau > 0.0 && *tau < 1.0)) bad("tau must lie in (0, 1)");
    if (dt && !(*dt > 0.0)) bad("dt must be positive");
    if (horizon && !(*horizon > 0.0)) bad("horizon must be positive");
    if (probe_stride && *probe_stride == 0) bad("probe_stride must be positive");
    if (!(eta > 0.0)) bad("eta must be positive");
    if (!(tolerance > 0.0)) bad("tolerance must be positive");
    if (probe_tau && !(*probe_tau > 0.0)) bad("probe_tau must be positive");
    if (a_path.empty() != b_path.empty() && command != "gamma") bad("A and b files must be given together");
    if ((rsm_m == 0) != (rsm_n == 0)) bad("rsm needs both m and n");
}

void apply_config_json(RunConfig& cfg, const Json& j, const std::string& source) {
    if (!j.is_object()) throw ParseError(source, 0, "config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        if (key == "kind") cfg.kind = string_of(v, source, key);
        else if (key == "a") cfg.a_path = string_of(v, source, key);
        else if (key == "b") cfg.b_path = string_of(v, source, key);
        else if (key == "rsm") {
            if (!v.is_array() || v.size() != 2) bad_key(source, key, "expected [m, n]");
            cfg.rsm_m = count_of(v[0], source, key);
            cfg.rsm_n = count_of(v[1], source, key);
        } else if (key == "seed") cfg.seed = count_of(v, source, key);
        else if (key == "alpha") cfg.alpha = number_of(v, source, key);
        else if (key == "tau") cfg.tau = number_of(v, source, key);
        else if (key == "dt") cfg.dt = number_of(v, source, key);
        else if (key == "horizon") cfg.horizon = number_of(v, source, key);
        else if (key == "probe_stride") cfg.probe_stride = count_of(v, source, key);
        else if (key == "eta") cfg.eta = number_of(v, source, key);
        else if (key == "tolerance") cfg.tolerance = number_of(v, source, key);
        else if (key == "cascade_cap") cfg.cascade_cap = count_of(v, source, key);
        else if (key == "out") cfg.out_dir = string_of(v, source, key);
        else if (key == "exact") {
            if (!v.is_boolean()) bad_key(source, key, "expected true or false");
            cfg.exact = v.get<bool>();
        } else if (key == "trials") cfg.trials = count_of(v, source, key);
        else if (key == "probe_tau") cfg.probe_tau = number_of(v, source, key);
        else if (key == "count") cfg.count = count_of(v, source, key);
        else if (key == "workers") cfg.workers = static_cast<unsigned>(count_of(v, source, key));
        else if (key == "instances") {
            if (!v.is_array()) bad_key(source, key, "expected an array of {a, b}");
            cfg.instances.clear();
            for (const auto& item : v) {
                if (!item.is_object() || !item.contains("a") || !item.contains("b")) {
                    bad_key(source, key, "each entry needs a and b");
                }
                cfg.instances.push_back({string_of(item["a"], source, key), string_of(item["b"], source, key)});
            }
        } else bad_key(source, key, "unknown key");
    }
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open config");
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path, 0, e.what());
    }
    apply_config_json(cfg, j, path);
}

Recommendation recommend(const ProblemInstance& instance, double tau, std::uint64_t seed) {
    Recommendation r;
    r.lambda_max = spectral_summary(instance.a).lambda_max;
    if (instance.n() >= instance.m()) {
        try {
            r.gamma = gamma_exact(instance.a).gamma;
            r.gamma_exact = true;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::CapExceeded) throw;
            r.gamma = gamma_sampled(instance.a, 10000, seed).gamma;
        }
    }
    const double n = static_cast<double>(instance.n());
    r.tau_formula = r.lambda_max > 0.0 ? std::min(0.1, r.gamma / (n * n * r.lambda_max * r.lambda_max)) : 0.0;
    r.alpha_bound = tau / static_cast<double>(instance.m());
    if (r.gamma > 0.0) r.alpha_bound = std::min(r.alpha_bound, tau * r.gamma);
    return r;
}

ResolvedParams resolve_params(const RunConfig& cfg, const ProblemInstance& instance, const Recommendation& rec) {
    cfg.validate();
    ResolvedParams p;
    p.tau = cfg.tau.value_or(0.1);
    p.eta = cfg.eta;
    p.side = cfg.kind == "nnls" ? Sidedness::OneSided : Sidedness::TwoSided;
    p.cascade_cap = cfg.cascade_cap;
    const bool verify = cfg.command == "verify";
    p.alpha = cfg.alpha.value_or(verify ? std::min(rec.alpha_bound, cfg.tolerance) : 0.01);
    const double imax = norm_inf(multiply_transposed(instance.a, instance.b));
    p.dt = cfg.dt.value_or(imax > 0.0 ? p.alpha / (4.0 * imax) : p.alpha / 4.0);
    p.horizon = cfg.horizon.value_or(verify ? 4.0 : 100.0);
    const Index steps = static_cast<Index>(std::ceil(p.horizon / p.dt - 1e-9));
    p.probe_stride = cfg.probe_stride.value_or(std::max<Index>(1, steps / 1000));
    return p;
}

Json to_json(const ResolvedParams& p) {
    Json j;
    j["alpha"] = json_number(p.alpha);
    j["eta"] = json_number(p.eta);
    j["tau"] = json_number(p.tau);
    j["dt"] = json_number(p.dt);
    j["horizon"] = json_number(p.horizon);
    j["probe_stride"] = p.probe_stride;
    j["cascade_cap"] = p.cascade_cap;
    j["sidedness"] = p.side == Sidedness::TwoSided ? "two-sided" : "one-sided";
    return j;
}

std::pair<ProblemInstance, std::string> load_instance(const RunConfig& cfg) {
    if (!cfg.a_path.empty()) return {read_instance(cfg.a_path, cfg.b_path), cfg.a_path};
    if (cfg.rsm_m > 0) {
        return {rsm_instance(cfg.rsm_m, cfg.rsm_n, cfg.seed),
                "rsm " + std::to_string(cfg.rsm_m) + "x" + std::to_string(cfg.rsm_n) + " seed " + std::to_string(cfg.seed)};
    }
    throw Error(ErrorKind::InvalidArgument, "no instance: give --a and --b or --rsm M N");
}

int cmd_solve(const RunConfig& cfg, std::ostream& log) {
    const auto [inst, desc] = load_instance(cfg);
    const ResolvedParams p = resolve_params(cfg, inst, recommend(inst, cfg.tau.value_or(0.1), cfg.seed));
    const Network net = build_network(inst, p.side, p.alpha, p.eta);
    const CoupledTrace run = simulate_with_dual(inst, net, sim_config(p));
    const Vector x = signed_rates(run.trace.final_state, net, inst.n());

    Json j = header(cfg, desc, inst);
    j["parameters"] = to_json(p);
    j["t"] = json_number(run.trace.final_state.t);
    j["x"] = to_json(x);
    j["spikes"] = run.trace.events.size();
    j["max_consistency_gap"] = json_number(run.max_consistency_gap);
    j["max_identity_gap"] = json_number(run.max_identity_gap);
    std::string reason;
    const auto oracle = try_oracle(inst, problem_kind(cfg), reason);
    if (oracle) {
        j["oracle"] = to_json(*oracle);
        j["eps_report"] = to_json(epsilon_report(inst, x, problem_kind(cfg), *oracle));
    } else {
        j["oracle"] = nullptr;
        j["eps_report"] = Json{{"unavailable", reason}};
    }

    ensure_dir(cfg.out_dir);
    write_json_file(path_in(cfg.out_dir, "solution.json"), j);
    write_text(path_in(cfg.out_dir, "events.csv"), [&](std::ostream& o) { write_events_csv(o, run.trace); });
    write_text(path_in(cfg.out_dir, "snapshots.csv"), [&](std::ostream& o) { write_snapshots_csv(o, run.trace); });
    log << "solve " << cfg.kind << ": " << run.trace.events.size() << " spikes, t = " << run.trace.final_state.t
        << ", artifacts in " << cfg.out_dir << '\n';
    return kExitOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& log) {
    const auto [inst, desc] = load_instance(cfg);
    const Recommendation rec = recommend(inst, cfg.tau.value_or(0.1), cfg.seed);
    const ResolvedParams p = resolve_params(cfg, inst, rec);
    const Network net = build_network(inst, p.side, p.alpha, p.eta);
    CouplingConfig cc;
    cc.tau = p.tau;
    cc.eta = p.eta;
    cc.sidedness = p.side;
    CouplingDiagnostics diag(inst, cc, p.dt, cfg.tolerance, false);
    SimConfig sc = sim_config(p);
    (void)simulate_with_dual(inst, net, sc, &diag);
    const LemmaReport report = diag.report();

    Json j = header(cfg, desc, inst);
    j["parameters"] = to_json(p);
    j["recommendation"] = to_json(rec);
    j["report"] = to_json(report);
    ensure_dir(cfg.out_dir);
    write_json_file(path_in(cfg.out_dir, "lemma_report.json"), j);
    for (const auto& name : kLemmaCheckNames) {
        const auto& c = report.checks.at(name);
        log << (c.pass ? "pass " : "FAIL ") << name << " worst " << format_double(c.worst_violation) << " at t = "
            << format_double(c.at_time) << '\n';
    }
    return report.all_pass() ? kExitOk : kExitLemmaViolation;
}

int cmd_gamma(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    DenseMatrix a;
    std::string desc;
    if (!cfg.a_path.empty()) {
        a = read_matrix_market_file(cfg.a_path);
        desc = cfg.a_path;
    } else if (cfg.rsm_m > 0) {
        a = rsm_sample(cfg.rsm_m, cfg.rsm_n, cfg.seed);
        desc = "rsm " + std::to_string(cfg.rsm_m) + "x" + std::to_string(cfg.rsm_n) + " seed " + std::to_string(cfg.seed);
    } else {
        throw Error(ErrorKind::InvalidArgument, "no matrix: give --a or --rsm M N");
    }

    Json j;
    j["command"] = "gamma";
    j["seed"] = cfg.seed;
    j["matrix"] = Json{{"source", desc}, {"m", a.rows()}, {"n", a.cols()}};
    GammaReport rep;
    try {
        rep = gamma_exact(a);
        j["method"] = "exact";
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::CapExceeded) throw;
        if (cfg.exact) {
            log << "exact niceness requested but enumeration exceeds caps\n";
            return kExitCapExceeded;
        }
        rep = gamma_sampled(a, cfg.trials, cfg.seed);
        j["method"] = "sampled";
    }
    j["report"] = to_json(rep);

    ensure_dir(cfg.out_dir);
    if (cfg.probe_tau) {
        const ProbeCurve curve = gamma_upper_probe(a, *cfg.probe_tau);
        const std::span<const double> head(curve.residual_norms.data(), curve.residual_norms.size() - 1);
        j["probe"] = Json{{"tau", *cfg.probe_tau},
                          {"bucket_size", curve.bucket_size},
                          {"hits", curve.hits},
                          {"log_slope", json_number(log_linear_slope(head))},
                          {"residual_norms", to_json(curve.residual_norms)}};
        write_text(path_in(cfg.out_dir, "probe.csv"), [&](std::ostream& o) { write_probe_csv(o, curve); });
    }
    write_json_file(path_in(cfg.out_dir, "gamma.json"), j);
    log << "gamma = " << format_double(rep.gamma) << " (" << j["method"].get<std::string>() << ")\n";
    return kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    struct Job {
        std::string label;
        std::uint64_t seed;
        RunConfig run;
    };
    std::vector<Job> jobs;
    if (!cfg.instances.empty()) {
        for (Index i = 0; i < cfg.instances.size(); ++i) {
            RunConfig r = cfg;
            r.a_path = cfg.instances[i].a;
            r.b_path = cfg.instances[i].b;
            jobs.push_back({"instance_" + std::to_string(i), cfg.seed, r});
        }
    } else {
        for (Index i = 0; i < cfg.count; ++i) {
            RunConfig r = cfg;
            r.rsm_m = cfg.rsm_m > 0 ? cfg.rsm_m : 3;
            r.rsm_n = cfg.rsm_n > 0 ? cfg.rsm_n : 6;
            r.seed = cfg.seed + i;
            r.a_path.clear();
            r.b_path.clear();
            jobs.push_back({"seed_" + std::to_string(r.seed), r.seed, r});
        }
    }
    ensure_dir(cfg.out_dir);
    const ProblemKind kind = problem_kind(cfg);

    std::vector<Json> rows(jobs.size());
    auto run_job = [&](Index i) {
        const Job& job = jobs[i];
        Json row;
        row["label"] = job.label;
        row["seed"] = job.seed;
        try {
            const auto [inst, desc] = load_instance(job.run);
            row["source"] = desc;
            const ResolvedParams p = resolve_params(job.run, inst, recommend(inst, job.run.tau.value_or(0.1), job.seed));
            row["parameters"] = to_json(p);
            std::string reason;
            const auto oracle = try_oracle(inst, kind, reason);
            if (!oracle) throw Error(ErrorKind::InvalidArgument, "oracle unavailable: " + reason);
            const Network net = build_network(inst, p.side, p.alpha, p.eta);
            const CoupledTrace run = simulate_with_dual(inst, net, sim_config(p));

            Json reach;
            std::vector<std::optional<double>> first(kEpsilonGrid.size());
            EpsReport last;
            const std::string csv = job.label + "_eps.csv";
            write_text(path_in(cfg.out_dir, csv), [&](std::ostream& o) {
                o << "time,eps_l2,eps_l1\n";
                for (const auto& s : run.trace.snapshots) {
                    last = epsilon_report(inst, s.x, kind, *oracle);
                    o << format_double(s.time) << ',' << format_double(last.eps_l2) << ','
                      << (kind == ProblemKind::L1 ? format_double(last.eps_l1) : std::string()) << '\n';
                    for (Index k = 0; k < kEpsilonGrid.size(); ++k)
                        if (!first[k] && last.passes_at.at(kEpsilonGrid[k])) first[k] = s.time;
                }
            });
            for (Index k = 0; k < kEpsilonGrid.size(); ++k)
                reach[eps_key(kEpsilonGrid[k])] = first[k] ? Json(*first[k]) : Json(nullptr);
            row["status"] = "ok";
            row["curve"] = csv;
            row["final_eps_l2"] = json_number(last.eps_l2);
            row["final_eps_l1"] = kind == ProblemKind::L1 ? json_number(last.eps_l1) : Json(nullptr);
            row["time_to_eps"] = reach;
        } catch (const Error& e) {
            row["status"] = "failed";
            row["error_kind"] = to_string(e.kind());
            row["error"] = e.what();
        }
        rows[i] = std::move(row);
    };

    unsigned workers = cfg.workers > 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, jobs.size()));
    std::atomic<Index> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (Index i = next++; i < jobs.size(); i = next++) run_job(i);
        });
    }
    for (auto& t : pool) t.join();

    Index failed = 0;
    Json list = Json::array();
    for (auto& row : rows) {
        if (row["status"] == "failed") ++failed;
        list.push_back(std::move(row));
    }
    Json j;
    j["command"] = "bench";
    j["kind"] = cfg.kind;
    j["seed"] = cfg.seed;
    j["count"] = jobs.size();
    j["warnings"] = failed;
    j["instances"] = list;
    write_json_file(path_in(cfg.out_dir, "summary.json"), j);
    log << "bench: " << jobs.size() << " instances, " << failed << " failed\n";
    if (failed > 0) log << "warning: " << failed << " instance(s) failed, see summary.json\n";
    return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spiking-network solvers for NNLS and l1 with dual-view diagnostics"};
    app.require_subcommand(1);

    RunConfig flags;
    std::string config_path;
    std::vector<Index> rsm;
    std::vector<std::string> instance_pairs;
    double alpha = 0, tau = 0, dt = 0, horizon = 0, probe_tau = 0;
    Index probe_stride = 0;
    std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config; flags override its keys")->check(CLI::ExistingFile);
        auto bind = [&](CLI::Option* o, std::function<void(RunConfig&)> f) { overrides.emplace_back(o, std::move(f)); };
        bind(sub->add_option("--a", flags.a_path, "Matrix Market file for A"), [&](RunConfig& c) { c.a_path = flags.a_path; });
        bind(sub->add_option("--b", flags.b_path, "b, one value per line"), [&](RunConfig& c) { c.b_path = flags.b_path; });
        bind(sub->add_option("--rsm", rsm, "random instance with unit columns: M N")->expected(2),
             [&](RunConfig& c) { c.rsm_m = rsm[0]; c.rsm_n = rsm[1]; });
        bind(sub->add_option("--seed", flags.seed, "RNG seed"), [&](RunConfig& c) { c.seed = flags.seed; });
        bind(sub->add_option("--out", flags.out_dir, "output directory"), [&](RunConfig& c) { c.out_dir = flags.out_dir; });
    };
    auto sim = [&](CLI::App* sub) {
        auto bind = [&](CLI::Option* o, std::function<void(RunConfig&)> f) { overrides.emplace_back(o, std::move(f)); };
        bind(sub->add_option("--alpha", alpha, "spike strength"), [&](RunConfig& c) { c.alpha = alpha; });
        bind(sub->add_option("--tau", tau, "shrink factor of the ideal polytope"), [&](RunConfig& c) { c.tau = tau; });
        bind(sub->add_option("--dt", dt, "time step"), [&](RunConfig& c) { c.dt = dt; });
        bind(sub->add_option("--horizon", horizon, "simulated time"), [&](RunConfig& c) { c.horizon = horizon; });
        bind(sub->add_option("--probe-stride", probe_stride, "steps between snapshots"),
             [&](RunConfig& c) { c.probe_stride = probe_stride; });
        bind(sub->add_option("--eta", flags.eta, "threshold"), [&](RunConfig& c) { c.eta = flags.eta; });
        bind(sub->add_option("--tolerance", flags.tolerance, "check tolerance"),
             [&](RunConfig& c) { c.tolerance = flags.tolerance; });
        bind(sub->add_option("--cascade-cap", flags.cascade_cap, "max cascade rounds per step (0: 10 n)"),
             [&](RunConfig& c) { c.cascade_cap = flags.cascade_cap; });
    };
    auto kind_flag = [&](CLI::App* sub) {
        overrides.emplace_back(sub->add_option("--kind", flags.kind, "nnls or l1")->check(CLI::IsMember({"nnls", "l1"})),
                               [&](RunConfig& c) { c.kind = flags.kind; });
    };

    auto* solve = app.add_subcommand("solve", "simulate and report the firing-rate solution");
    overrides.emplace_back(solve->add_option("kind", flags.kind, "nnls or l1")->required()->check(CLI::IsMember({"nnls", "l1"})),
                           [&](RunConfig& c) { c.kind = flags.kind; });
    common(solve);
    sim(solve);

    auto* verify = app.add_subcommand("verify", "simulate with coupling diagnostics and check the structural properties");
    kind_flag(verify);
    common(verify);
    sim(verify);

    auto* gamma = app.add_subcommand("gamma", "niceness of A");
    common(gamma);
    overrides.emplace_back(gamma->add_flag("--exact", flags.exact, "fail instead of sampling when enumeration is too large"),
                           [&](RunConfig& c) { c.exact = flags.exact; });
    overrides.emplace_back(gamma->add_option("--trials", flags.trials, "sampled tuples"),
                           [&](RunConfig& c) { c.trials = flags.trials; });
    overrides.emplace_back(gamma->add_option("--probe-tau", probe_tau, "also run the bucket probe with this tau"),
                           [&](RunConfig& c) { c.probe_tau = probe_tau; });

    auto* bench = app.add_subcommand("bench", "convergence curves over a batch of instances");
    kind_flag(bench);
    common(bench);
    sim(bench);
    overrides.emplace_back(bench->add_option("--count", flags.count, "random instances (seed, seed+1, ...)"),
                           [&](RunConfig& c) { c.count = flags.count; });
    overrides.emplace_back(bench->add_option("--instance", instance_pairs, "A,b file pair; repeatable"),
                           [&](RunConfig& c) {
                               c.instances.clear();
                               for (const auto& s : instance_pairs) {
                                   const auto comma = s.find(',');
                                   if (comma == std::string::npos) throw Error(ErrorKind::InvalidArgument, "--instance expects A,b");
                                   c.instances.push_back({s.substr(0, comma), s.substr(comma + 1)});
                               }
                           });
    overrides.emplace_back(bench->add_option("--workers", flags.workers, "worker threads (0: hardware)"),
                           [&](RunConfig& c) { c.workers = flags.workers; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitParse;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        for (const auto& [opt, apply] : overrides)
            if (opt->count() > 0) apply(cfg);
        const CLI::App* chosen = app.get_subcommands().front();
        cfg.command = chosen->get_name();
        if (cfg.command == "solve") return cmd_solve(cfg, out);
        if (cfg.command == "verify") return cmd_verify(cfg, out);
        if (cfg.command == "gamma") return cmd_gamma(cfg, out);
        return cmd_bench(cfg, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::Parse: return kExitParse;
            case ErrorKind::Divergence: return kExitDivergence;
            case ErrorKind::CapExceeded: return kExitCapExceeded;
            default: return kExitUsage;
        }
    }
}

}  // namespace spikeopt
