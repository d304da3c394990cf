#pragma once

#include "spikeopt/numerics.hpp"

namespace spikeopt {

/// Optimization input: A (m x n) and b (m).
struct ProblemInstance {
    DenseMatrix a;
    Vector b;

    ProblemInstance() = default;
    /// Validates that b matches A's row count.
    ProblemInstance(DenseMatrix a_in, Vector b_in);

    [[nodiscard]] Index m() const noexcept { return a.rows(); }
    [[nodiscard]] Index n() const noexcept { return a.cols(); }

    /// Column A_j for a signed 1-based wall index j; A_{-i} = -A_i.
    [[nodiscard]] Vector signed_column(long j) const;
};

}  // namespace spikeopt
