#pragma once

#include <cstddef>
#include <vector>

namespace spikeopt {

/// C(n, k) as a double so large counts compare against caps without overflow.
[[nodiscard]] inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// Calls fn(indices) for every k-subset of {0..n-1} in lexicographic order.
/// fn returns false to stop early.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t k, Fn&& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
        if (!fn(static_cast<const std::vector<std::size_t>&>(idx))) return;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace spikeopt
