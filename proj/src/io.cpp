#include "spikeopt/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "spikeopt/error.hpp"

namespace spikeopt {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool skippable(const std::string& line, bool hash_comments) {
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos) return true;
    return line[pos] == '%' || (hash_comments && line[pos] == '#');
}

double parse_double(const std::string& tok, const std::string& source, std::size_t line) {
    double x = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last) throw ParseError(source, line, "not a number: '" + tok + "'");
    if (!std::isfinite(x)) throw ParseError(source, line, "non-finite value: '" + tok + "'");
    return x;
}

Index parse_size(const std::string& tok, const std::string& source, std::size_t line) {
    unsigned long long x = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || x == 0) {
        throw ParseError(source, line, "expected a positive integer, got '" + tok + "'");
    }
    return static_cast<Index>(x);
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, 0, "cannot open file");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
    return out;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

DenseMatrix read_matrix_market(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(source, 1, "empty file");
    ++lineno;
    const auto header = split(line);
    if (header.empty() || header[0] != "%%MatrixMarket") {
        throw ParseError(source, lineno, "missing %%MatrixMarket header");
    }
    if (header.size() != 5 || lower(header[1]) != "matrix") {
        throw ParseError(source, lineno, "header must read '%%MatrixMarket matrix array real general'");
    }
    if (lower(header[2]) != "array") throw ParseError(source, lineno, "only the dense array format is supported");
    const std::string field = lower(header[3]);
    if (field != "real" && field != "integer" && field != "double") {
        throw ParseError(source, lineno, "unsupported field '" + header[3] + "'");
    }
    if (lower(header[4]) != "general") throw ParseError(source, lineno, "only general symmetry is supported");

    Index rows = 0, cols = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line, false)) continue;
        const auto tok = split(line);
        if (tok.size() != 2) throw ParseError(source, lineno, "size line must hold two integers");
        rows = parse_size(tok[0], source, lineno);
        cols = parse_size(tok[1], source, lineno);
        break;
    }
    if (rows == 0) throw ParseError(source, lineno + 1, "missing size line");

    DenseMatrix a(rows, cols);
    const Index total = rows * cols;
    Index k = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line, false)) continue;
        for (const auto& tok : split(line)) {
            if (k == total) throw ParseError(source, lineno, "more than " + std::to_string(total) + " values");
            a(k % rows, k / rows) = parse_double(tok, source, lineno);
            ++k;
        }
    }
    if (k < total) {
        throw ParseError(source, lineno + 1,
                         "expected " + std::to_string(total) + " values, found " + std::to_string(k));
    }
    return a;
}

DenseMatrix read_matrix_market_file(const std::string& path) {
    auto in = open_input(path);
    return read_matrix_market(in, path);
}

void write_matrix_market(std::ostream& out, const DenseMatrix& a) {
    out << "%%MatrixMarket matrix array real general\n" << a.rows() << ' ' << a.cols() << '\n';
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) out << format_double(a(i, j)) << '\n';
}

void write_matrix_market_file(const std::string& path, const DenseMatrix& a) {
    auto out = open_output(path);
    write_matrix_market(out, a);
}

Vector read_vector(std::istream& in, const std::string& source) {
    Vector v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skippable(line, true)) continue;
        const auto tok = split(line);
        if (tok.size() != 1) throw ParseError(source, lineno, "expected one value per line");
        v.push_back(parse_double(tok[0], source, lineno));
    }
    if (v.empty()) throw ParseError(source, lineno + 1, "no values");
    return v;
}

Vector read_vector_file(const std::string& path) {
    auto in = open_input(path);
    return read_vector(in, path);
}

void write_vector(std::ostream& out, std::span<const double> v) {
    for (double x : v) out << format_double(x) << '\n';
}

void write_vector_file(const std::string& path, std::span<const double> v) {
    auto out = open_output(path);
    write_vector(out, v);
}

ProblemInstance read_instance(const std::string& a_path, const std::string& b_path) {
    DenseMatrix a = read_matrix_market_file(a_path);
    Vector b = read_vector_file(b_path);
    if (b.size() != a.rows()) {
        throw ParseError(b_path, 0, "b has " + std::to_string(b.size()) + " entries but A has " +
                                        std::to_string(a.rows()) + " rows");
    }
    return ProblemInstance(std::move(a), std::move(b));
}

void write_events_csv(std::ostream& out, const SpikeTrace& trace) {
    out << "time,neuron,sign\n";
    for (const auto& e : trace.events) out << format_double(e.time) << ',' << e.neuron + 1 << ',' << e.sign << '\n';
}

void write_snapshots_csv(std::ostream& out, const SpikeTrace& trace) {
    const Index k = trace.snapshots.empty() ? trace.final_state.u.size() : trace.snapshots.front().u.size();
    Index m = 0;
    if (!trace.snapshots.empty() && trace.snapshots.front().v) m = trace.snapshots.front().v->size();
    out << "time";
    for (Index i = 1; i <= k; ++i) out << ",u_" << i;
    for (Index i = 1; i <= k; ++i) out << ",x_" << i;
    for (Index i = 1; i <= m; ++i) out << ",v_" << i;
    out << '\n';
    for (const auto& s : trace.snapshots) {
        out << format_double(s.time);
        for (double x : s.u) out << ',' << format_double(x);
        for (double x : s.x) out << ',' << format_double(x);
        if (s.v)
            for (double x : *s.v) out << ',' << format_double(x);
        out << '\n';
    }
}

void write_probe_csv(std::ostream& out, const ProbeCurve& curve) {
    out << "bucket_index,residual_norm\n";
    for (Index s = 0; s < curve.residual_norms.size(); ++s)
        out << s << ',' << format_double(curve.residual_norms[s]) << '\n';
}

Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json to_json(std::span<const double> v) {
    Json j = Json::array();
    for (double x : v) j.push_back(json_number(x));
    return j;
}

Json to_json(const OracleSolution& s) {
    Json j;
    j["method"] = s.method;
    j["x_opt"] = to_json(s.x_opt);
    j["objective"] = json_number(s.objective);
    j["dual_certificate"] = s.dual_certificate ? to_json(*s.dual_certificate) : Json(nullptr);
    j["iterations"] = s.iterations;
    j["distinct_minimizers"] = s.distinct_minimizers;
    return j;
}

Json to_json(const EpsReport& r) {
    Json j;
    j["kind"] = to_string(r.kind);
    j["eps_l2"] = json_number(r.eps_l2);
    j["eps_l1"] = json_number(r.eps_l1);
    j["eps_l1_absolute"] = r.eps_l1_absolute;
    Json grid = Json::array();
    for (const auto& [eps, ok] : r.passes_at) grid.push_back(Json{{"eps", eps}, {"pass", ok}});
    j["passes_at"] = grid;
    return j;
}

Json to_json(const GammaReport& r) {
    Json j;
    j["gamma"] = json_number(r.gamma);
    j["gamma_nondegen"] = json_number(r.gamma_nondegen);
    j["gamma_vertex_gap"] = json_number(r.gamma_vertex_gap);
    j["gamma_min_coord"] = json_number(r.gamma_min_coord);
    j["exact"] = r.exact;
    j["samples_used"] = r.samples_used;
    return j;
}

Json to_json(const CheckResult& c) {
    Json j;
    j["pass"] = c.pass;
    j["worst_violation"] = json_number(c.worst_violation);
    j["at_time"] = json_number(c.at_time);
    j["evaluated"] = c.evaluated;
    return j;
}

Json to_json(const LemmaReport& r) {
    Json j;
    j["all_pass"] = r.all_pass();
    j["tolerance"] = json_number(r.tolerance);
    j["steps"] = r.steps;
    j["spikes"] = r.spikes;
    Json checks;
    for (const auto& name : kLemmaCheckNames) checks[name] = to_json(r.checks.at(name));
    j["checks"] = checks;
    j["distance_contraction"] = to_json(r.distance_contraction);
    j["spikes_outside_active_set"] = r.spikes_outside_active_set;
    return j;
}

void write_json_file(const std::string& path, const Json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

}  // namespace spikeopt
