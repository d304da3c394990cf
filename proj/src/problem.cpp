#include "spikeopt/problem.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "spikeopt/error.hpp"

namespace spikeopt {

ProblemInstance::ProblemInstance(DenseMatrix a_in, Vector b_in)
    : a(std::move(a_in)), b(std::move(b_in)) {
    if (b.size() != a.rows()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "b has " + std::to_string(b.size()) + " entries but A has " +
                        std::to_string(a.rows()) + " rows");
    }
    for (double x : b) {
        if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, "b has non-finite entries");
    }
}

Vector ProblemInstance::signed_column(long j) const {
    const auto mag = static_cast<Index>(std::labs(j));
    if (j == 0 || mag > n()) {
        throw Error(ErrorKind::OutOfRange, "wall index " + std::to_string(j) + " out of range");
    }
    Vector c = a.column(mag - 1);
    if (j < 0)
        for (double& x : c) x = -x;
    return c;
}

}  // namespace spikeopt
