#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "airgan/core/error.hpp"
#include "airgan/nn/tensor.hpp"

namespace airgan::rrgan {

enum class ReconstructionNorm { l2, l1 };

inline ReconstructionNorm reconstruction_from_name(const std::string& s)
{
    if (s == "l2" || s == "rmse") {
        return ReconstructionNorm::l2;
    }
    if (s == "l1" || s == "mae") {
        return ReconstructionNorm::l1;
    }
    throw ConfigError("unknown reconstruction norm '" + s + "'");
}

inline constexpr double probability_floor = 1e-7;

inline double clamp_probability(double p) { return std::clamp(p, probability_floor, 1.0 - probability_floor); }

struct GanLossValues {
    double generator = 0.0;
    double discriminator = 0.0;
    double adversarial = 0.0;
    double reconstruction = 0.0;
};

/// Per-sample reconstruction error averaged over the batch: RMSE for l2, mean absolute
/// error for l1. When `grad` is non-null it receives d(error)/d(pred).
template <class T>
double reconstruction_error(const nn::BasicTensor<T>& pred, const nn::BasicTensor<T>& target, ReconstructionNorm norm,
                            nn::BasicTensor<T>* grad = nullptr)
{
    pred.require_same_shape(target, "reconstruction");
    require(pred.rank() >= 1 && pred.dim(0) >= 1, "reconstruction: empty batch");
    const std::size_t batch = pred.dim(0);
    const std::size_t m = pred.size() / batch;
    if (grad) {
        *grad = nn::BasicTensor<T>(pred.shape());
    }
    double total = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
        const std::size_t off = n * m;
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = static_cast<double>(pred[off + i]) - static_cast<double>(target[off + i]);
            acc += norm == ReconstructionNorm::l2 ? d * d : std::abs(d);
        }
        const double err = norm == ReconstructionNorm::l2 ? std::sqrt(acc / static_cast<double>(m))
                                                          : acc / static_cast<double>(m);
        total += err;
        if (grad) {
            for (std::size_t i = 0; i < m; ++i) {
                const double d = static_cast<double>(pred[off + i]) - static_cast<double>(target[off + i]);
                double g = 0.0;
                if (norm == ReconstructionNorm::l2) {
                    g = err > 0.0 ? d / (static_cast<double>(m) * err) : 0.0;
                } else {
                    g = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(m);
                }
                (*grad)[off + i] = static_cast<T>(g / static_cast<double>(batch));
            }
        }
    }
    return total / static_cast<double>(batch);
}

/// Discriminator loss -[log d_real + log(1 - d_fake)] and generator loss -log d_fake +
/// lambda * reconstruction, averaged over the batch.
template <class T>
GanLossValues gan_losses(std::span<const double> d_real, std::span<const double> d_fake,
                         const nn::BasicTensor<T>& p_fake, const nn::BasicTensor<T>& r_real, double lambda,
                         ReconstructionNorm norm = ReconstructionNorm::l2)
{
    require(!d_fake.empty() && d_real.size() == d_fake.size(), "gan_losses: mismatched probability batches");
    require(lambda >= 0.0, "gan_losses: lambda must be non-negative");
    GanLossValues v;
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const double dr = clamp_probability(d_real[i]);
        const double df = clamp_probability(d_fake[i]);
        v.discriminator += -(std::log(dr) + std::log(1.0 - df));
        v.adversarial += -std::log(df);
    }
    v.discriminator /= static_cast<double>(d_real.size());
    v.adversarial /= static_cast<double>(d_real.size());
    v.reconstruction = reconstruction_error(p_fake, r_real, norm);
    v.generator = v.adversarial + lambda * v.reconstruction;
    return v;
}

template <class T>
GanLossValues gan_losses(double d_real, double d_fake, const nn::BasicTensor<T>& p_fake,
                         const nn::BasicTensor<T>& r_real, double lambda,
                         ReconstructionNorm norm = ReconstructionNorm::l2)
{
    return gan_losses(std::span<const double>(&d_real, 1), std::span<const double>(&d_fake, 1), p_fake, r_real,
                      lambda, norm);
}

} // namespace airgan::rrgan
