#include "spikeopt/error.hpp"

namespace spikeopt {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::NonConvergence: return "non_convergence";
        case ErrorKind::OutOfRange: return "out_of_range";
        case ErrorKind::Divergence: return "divergence";
        case ErrorKind::Degeneracy: return "degeneracy";
        case ErrorKind::CapExceeded: return "cap_exceeded";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::MissingDiagnostics: return "missing_diagnostics";
    }
    return "unknown";
}

}  // namespace spikeopt
