#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "covest/error.hpp"
#include "covest/samples.hpp"

namespace covest {

/// Contiguous equal-size block partition of sample indices. The block
/// count follows the confidence level; trailing indices that do not fill
/// a block are discarded.
struct BlockScheme {
    std::size_t total = 0;
    double delta = 0.0;
    std::size_t block_count = 0;
    std::size_t block_size = 0;
    std::vector<std::pair<std::size_t, std::size_t>> blocks; // [begin, end)

    std::size_t coverage() const noexcept { return block_count * block_size; }
};

/// n = clamp(ceil(ln(1/delta)), 1, floor(N/2)), m = floor(N/n). The 1e-9
/// slack keeps round-trip values like delta = e^-3 from ceiling up one.
inline BlockScheme partition_blocks(std::size_t n_samples, double delta) {
    if (n_samples < 2)
        throw invalid_parameter_error("partition_blocks: need N >= 2, got " +
                                      std::to_string(n_samples));
    if (!(delta > 0.0) || !(delta < 1.0))
        throw invalid_parameter_error("partition_blocks: delta must lie in (0, 1)");

    const double raw = -std::log(delta);
    std::size_t n = static_cast<std::size_t>(std::max(1.0, std::ceil(raw - 1e-9)));
    n = std::min(n, n_samples / 2);
    n = std::max<std::size_t>(n, 1);

    BlockScheme scheme;
    scheme.total = n_samples;
    scheme.delta = delta;
    scheme.block_count = n;
    scheme.block_size = n_samples / n;
    scheme.blocks.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        scheme.blocks.emplace_back(j * scheme.block_size, (j + 1) * scheme.block_size);
    return scheme;
}

/// The ceil(k/2)-th smallest of k values. Even counts take the lower of
/// the two central order statistics, so the result is always an observed
/// value.
inline double lower_median(std::vector<double> values) {
    if (values.empty())
        throw invalid_input_error("lower_median: empty input");
    const std::size_t k = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k),
                     values.end());
    return values[k];
}

/// Least radius covering a strict majority of the values in absolute
/// value: the (floor(n/2)+1)-th smallest of |values|.
inline double majority_radius(std::vector<double> values) {
    if (values.empty())
        throw invalid_input_error("majority_radius: empty input");
    for (double& v : values) v = std::abs(v);
    const std::size_t k = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k),
                     values.end());
    return values[k];
}

/// Lower median of the per-block averages.
inline double mom_scalar(const std::vector<double>& values, const BlockScheme& scheme) {
    if (values.size() < scheme.coverage())
        throw invalid_input_error("mom_scalar: values shorter than the block coverage");
    std::vector<double> means;
    means.reserve(scheme.block_count);
    for (const auto& [begin, end] : scheme.blocks) {
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += values[i];
        means.push_back(sum / static_cast<double>(end - begin));
    }
    return lower_median(std::move(means));
}

/// Stage 1: median-of-means over the squared sample norms.
inline double estimate_trace(const SampleSet& s, double delta) {
    const BlockScheme scheme = partition_blocks(s.count(), delta);
    std::vector<double> sq(s.count());
    for (std::size_t i = 0; i < s.count(); ++i) sq[i] = s.row_sq_norm(i);
    return mom_scalar(sq, scheme);
}

} // namespace covest
