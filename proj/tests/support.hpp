#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "airgan/nn/grad_check.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::testing {

using DTensor = nn::BasicTensor<double>;

// Reference link budget in the log domain: FSPL[dB] = 20 log10(4 pi d f / c),
// RSRP[dBm] = EIRP[dBm] - FSPL[dB]. Independent of the linear-domain library path.
struct DbOracle {
    static double fspl_db(double d, double f)
    {
        return 20.0 * std::log10(d) + 20.0 * std::log10(f) + 20.0 * std::log10(4.0 * std::numbers::pi / 299792458.0);
    }
    static double path_loss(double d, double f) { return std::pow(10.0, fspl_db(d, f) / 10.0); }
    static double rsrp_w(double eirp_w, double f, double d)
    {
        const double eirp_dbm = 10.0 * std::log10(eirp_w * 1000.0);
        return std::pow(10.0, (eirp_dbm - fspl_db(d, f)) / 10.0) / 1000.0;
    }
};

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline DTensor random_tensor(const nn::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0)
{
    DTensor t(shape);
    Rng rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    for (double& v : t.data()) {
        v = d(rng);
    }
    return t;
}

// Distinct values spaced at least 0.02 apart and at least 0.01 from zero, so that
// finite differences never cross a ReLU kink or a max-pool tie.
inline DTensor well_separated(const nn::Shape& shape, std::uint64_t seed)
{
    DTensor t(shape);
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const double span = 0.02 * static_cast<double>(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = -0.5 * span + 0.02 * static_cast<double>(order[i]) + 0.01;
    }
    return t;
}

inline double weighted_sum(const DTensor& y, const DTensor& w)
{
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += y[i] * w[i];
    }
    return s;
}

// Loss L = sum(y * w) for fixed random w; checks parameters and input.
inline nn::GradCheckResult layer_grad_check(nn::Layer<double>& layer, DTensor input, const nn::PassContext& ctx,
                                            double eps = 1e-3)
{
    nn::LayerCache<double> cache;
    const DTensor y = layer.forward(input, ctx, cache);
    const DTensor w = random_tensor(y.shape(), 99);
    layer.zero_grad();
    const DTensor gin = layer.backward(cache, w);

    std::vector<nn::Parameter<double>> targets = layer.parameters();
    DTensor input_grad = gin;
    targets.push_back({"input", &input, &input_grad});
    // Probe passes must not move batchnorm running statistics.
    nn::PassContext probe = ctx;
    probe.update_stats = false;
    const auto loss = [&] {
        nn::LayerCache<double> c;
        return weighted_sum(layer.forward(input, probe, c), w);
    };
    return nn::check_gradients(targets, loss, eps, 200, 7);
}

} // namespace airgan::testing
