#pragma once

// File formats: Matrix Market array files for A, one value per line for b, CSV
// traces and JSON reports.

#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "spikeopt/coupling_diag.hpp"
#include "spikeopt/niceness.hpp"
#include "spikeopt/numerics.hpp"
#include "spikeopt/oracles.hpp"
#include "spikeopt/problem.hpp"
#include "spikeopt/snn_sim.hpp"

namespace spikeopt {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
[[nodiscard]] std::string format_double(double x);

/// Dense "%%MatrixMarket matrix array real general" reader. Throws ParseError
/// naming the source and line.
[[nodiscard]] DenseMatrix read_matrix_market(std::istream& in, const std::string& source);
[[nodiscard]] DenseMatrix read_matrix_market_file(const std::string& path);
void write_matrix_market(std::ostream& out, const DenseMatrix& a);
void write_matrix_market_file(const std::string& path, const DenseMatrix& a);

/// One value per line; blank lines and lines starting with '%' or '#' are skipped.
[[nodiscard]] Vector read_vector(std::istream& in, const std::string& source);
[[nodiscard]] Vector read_vector_file(const std::string& path);
void write_vector(std::ostream& out, std::span<const double> v);
void write_vector_file(const std::string& path, std::span<const double> v);

[[nodiscard]] ProblemInstance read_instance(const std::string& a_path, const std::string& b_path);

/// time,neuron,sign with 1-based neurons.
void write_events_csv(std::ostream& out, const SpikeTrace& trace);
/// time,u_1..u_k,x_1..x_k and v_1..v_m when snapshots carry the dual state.
void write_snapshots_csv(std::ostream& out, const SpikeTrace& trace);
/// bucket_index,residual_norm
void write_probe_csv(std::ostream& out, const ProbeCurve& curve);

/// Non-finite doubles become null.
[[nodiscard]] Json json_number(double x);
[[nodiscard]] Json to_json(std::span<const double> v);
[[nodiscard]] Json to_json(const OracleSolution& s);
[[nodiscard]] Json to_json(const EpsReport& r);
[[nodiscard]] Json to_json(const GammaReport& r);
[[nodiscard]] Json to_json(const CheckResult& c);
[[nodiscard]] Json to_json(const LemmaReport& r);

/// Writes json.dump(2) plus a trailing newline.
void write_json_file(const std::string& path, const Json& j);

}  // namespace spikeopt
