#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::rrgan {

/// Convolutional real/fake classifier over (environment, reward map) stacks: 4x4 conv +
/// batchnorm + ReLU blocks with 2x2 max pooling between them, then two dense layers.
struct DiscriminatorConfig {
    std::size_t height = 100;
    std::size_t width = 100;
    std::size_t in_channels = 2;
    std::vector<std::size_t> widths{64, 128, 256, 512, 512};
    std::size_t hidden = 128;
    double dropout = 0.5;
    /// Apply a ReLU to the final score before the logistic (always yields p >= 0.5).
    bool final_relu = false;

    static DiscriminatorConfig full(std::size_t n_drones)
    {
        DiscriminatorConfig c;
        c.in_channels = 1 + n_drones;
        return c;
    }

    static DiscriminatorConfig desk(std::size_t n_drones)
    {
        DiscriminatorConfig c;
        c.height = 32;
        c.width = 32;
        c.in_channels = 1 + n_drones;
        c.widths = {8, 16, 32, 32, 32};
        c.hidden = 32;
        return c;
    }

    void validate() const
    {
        require_config(!widths.empty(), "discriminator: at least one conv block");
        require_config(hidden >= 1, "discriminator: hidden width must be positive");
        require_config(dropout >= 0.0 && dropout < 1.0, "discriminator: dropout must lie in [0, 1)");
    }
};

template <class T>
class DiscriminatorT {
public:
    using Cache = std::vector<nn::LayerCache<T>>;

    DiscriminatorT(const DiscriminatorConfig& config, std::uint64_t seed)
        : config_(config)
        , net_(1000)
    {
        config_.validate();
        Rng rng(seed);
        std::size_t in = config_.in_channels;
        std::size_t h = config_.height, w = config_.width;
        for (std::size_t i = 0; i < config_.widths.size(); ++i) {
            if (i > 0) {
                net_.template emplace<nn::MaxPool2d<T>>();
                h /= 2;
                w /= 2;
            }
            net_.template emplace<nn::Conv2d<T>>(in, config_.widths[i], 4, 4, 1, rng);
            net_.template emplace<nn::BatchNorm2d<T>>(config_.widths[i]);
            net_.template emplace<nn::ReLU<T>>();
            in = config_.widths[i];
        }
        require_config(h >= 1 && w >= 1, "discriminator: input too small for the number of blocks");
        net_.template emplace<nn::Linear<T>>(in * h * w, config_.hidden, rng);
        net_.template emplace<nn::ReLU<T>>();
        net_.template emplace<nn::Dropout<T>>(config_.dropout);
        net_.template emplace<nn::Linear<T>>(config_.hidden, 1, rng);
        if (config_.final_relu) {
            net_.template emplace<nn::ReLU<T>>();
        }
    }

    const DiscriminatorConfig& config() const { return config_; }

    /// Pre-logistic scores, shape (N, 1).
    nn::BasicTensor<T> forward(const nn::BasicTensor<T>& input, const nn::PassContext& ctx, Cache& cache)
    {
        return net_.forward(input, ctx, cache);
    }

    nn::BasicTensor<T> backward(const Cache& cache, const nn::BasicTensor<T>& grad_scores)
    {
        return net_.backward(cache, grad_scores);
    }

    std::vector<nn::Parameter<T>> parameters() { return net_.parameters("disc."); }
    std::vector<std::pair<std::string, nn::BasicTensor<T>*>> buffers() { return net_.buffers("disc."); }
    std::vector<nn::LayerSpec> specs() const { return net_.specs(); }
    void zero_grad() { net_.zero_grad(); }
    nn::Shape output_shape(std::size_t batch) const
    {
        return net_.output_shape({batch, config_.in_channels, config_.height, config_.width});
    }
    nn::Sequential<T>& network() { return net_; }

private:
    DiscriminatorConfig config_;
    nn::Sequential<T> net_;
};

using Discriminator = DiscriminatorT<float>;

inline double logistic(double z)
{
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

} // namespace airgan::rrgan
