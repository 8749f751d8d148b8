#pragma once

// Test support for networks: replays the documented parameter layout
// (per layer, row-major weights then biases) to inspect hidden
// pre-activations. Central finite differences are only valid when no hidden
// unit sits within the probe step of its rectifier kink, so gradient tests
// filter such samples out.

#include <cmath>
#include <span>
#include <vector>

#include "orl/mlp.hpp"

namespace orl::testing {

inline double min_hidden_preactivation_magnitude(const Mlp& net, std::span<const double> x) {
    const auto& sizes = net.layer_sizes();
    const auto params = net.parameters();
    std::vector<double> current(x.begin(), x.end());
    double closest = std::numeric_limits<double>::infinity();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int rows = sizes[l + 1];
        const int cols = sizes[l];
        const double* w = params.data() + offset;
        const double* b = params.data() + offset + static_cast<std::size_t>(rows) * cols;
        offset += static_cast<std::size_t>(rows) * cols + rows;
        std::vector<double> next(static_cast<std::size_t>(rows));
        const bool hidden = l + 2 < sizes.size();
        for (int r = 0; r < rows; ++r) {
            double z = b[r];
            for (int c = 0; c < cols; ++c) {
                z += w[static_cast<std::size_t>(r) * cols + c] * current[static_cast<std::size_t>(c)];
            }
            if (hidden) {
                closest = std::min(closest, std::abs(z));
            }
            next[static_cast<std::size_t>(r)] = hidden && z < 0.0 ? 0.0 : z;
        }
        current = std::move(next);
    }
    return closest;
}

} // namespace orl::testing
