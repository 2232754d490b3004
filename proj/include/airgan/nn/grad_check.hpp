#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "airgan/core/rng.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::nn {

struct GradCheckResult {
    std::size_t checked = 0;
    double max_relative_error = 0.0;
    std::string worst_coordinate;
};

/// Compares stored analytic gradients against central differences of `loss`.
///
/// `targets` pairs each probed tensor with its analytic gradient (parameters, and the input
/// if its gradient is wanted). `loss` must recompute the scalar from the current values.
/// Coordinates: `min_coordinates` drawn uniformly over all entries plus up to 3 per tensor.
/// Error per coordinate is |a - n| / max(|a|, |n|, 1e-3 * max|a| over that tensor,
/// 1e-6 * max|a| over all tensors). The last floor covers tensors whose true gradient is
/// identically zero (a conv bias ahead of batchnorm), where only rounding noise remains.
inline GradCheckResult check_gradients(const std::vector<Parameter<double>>& targets,
                                       const std::function<double()>& loss, double epsilon,
                                       std::size_t min_coordinates, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    std::size_t total = 0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        total += targets[t].value->size();
        const std::size_t n = targets[t].value->size();
        for (std::size_t k = 0; k < std::min<std::size_t>(3, n); ++k) {
            coords.emplace_back(t, uniform_index(rng, n));
        }
    }
    require(total > 0, "check_gradients: nothing to check");
    for (std::size_t k = 0; k < min_coordinates; ++k) {
        std::size_t flat = uniform_index(rng, total);
        std::size_t t = 0;
        while (flat >= targets[t].value->size()) {
            flat -= targets[t].value->size();
            ++t;
        }
        coords.emplace_back(t, flat);
    }

    std::vector<double> scale(targets.size(), 0.0);
    double global_scale = 0.0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (double g : targets[t].grad->data()) {
            scale[t] = std::max(scale[t], std::abs(g));
        }
        global_scale = std::max(global_scale, scale[t]);
    }

    GradCheckResult result;
    for (const auto& [t, i] : coords) {
        double& x = (*targets[t].value)[i];
        const double saved = x;
        x = saved + epsilon;
        const double up = loss();
        x = saved - epsilon;
        const double down = loss();
        x = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double analytic = (*targets[t].grad)[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3 * scale[t], 1e-6 * global_scale, 1e-12});
        const double err = std::abs(analytic - numeric) / denom;
        ++result.checked;
        if (err > result.max_relative_error || result.worst_coordinate.empty()) {
            result.max_relative_error = std::max(result.max_relative_error, err);
            result.worst_coordinate = targets[t].name + "[" + std::to_string(i) + "] analytic "
                + std::to_string(analytic) + " numeric " + std::to_string(numeric);
        }
    }
    return result;
}

} // namespace airgan::nn
