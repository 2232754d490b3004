#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/network.hpp"

namespace airgan::rrgan {

using nn::BasicTensor;
using nn::LayerCache;
using nn::PassContext;
using nn::Shape;

/// U-net reward-map generator. `widths[i]` is the depth at encoder level i; level i has
/// resolution floor(H / 2^i). Input depth is 1 + n_drones, output depth n_drones.
struct GeneratorConfig {
    std::size_t height = 100;
    std::size_t width = 100;
    std::size_t n_drones = 1;
    std::vector<std::size_t> widths{64, 128, 256, 512, 1024};
    std::size_t kernel = 3;

    static GeneratorConfig full(std::size_t n_drones)
    {
        GeneratorConfig c;
        c.n_drones = n_drones;
        return c;
    }

    /// 32x32 maps, three down/up levels.
    static GeneratorConfig desk(std::size_t n_drones)
    {
        GeneratorConfig c;
        c.height = 32;
        c.width = 32;
        c.n_drones = n_drones;
        c.widths = {8, 16, 32, 64};
        return c;
    }

    std::size_t in_channels() const { return 1 + n_drones; }
    std::size_t levels() const { return widths.size(); }

    void validate() const
    {
        require_config(n_drones >= 1, "generator: at least one drone channel");
        require_config(widths.size() >= 2, "generator: at least two levels");
        require_config(kernel % 2 == 1, "generator: kernel must be odd");
        std::size_t h = height, w = width;
        for (std::size_t i = 1; i < widths.size(); ++i) {
            h /= 2;
            w /= 2;
        }
        require_config(h >= 1 && w >= 1, "generator: input too small for the number of levels");
        for (std::size_t v : widths) {
            require_config(v >= 1, "generator: widths must be positive");
        }
    }
};

template <class T>
class GeneratorT {
public:
    struct Cache {
        std::vector<std::vector<LayerCache<T>>> down, upsample, merge;
        std::vector<LayerCache<T>> out;
    };

    GeneratorT(const GeneratorConfig& config, std::uint64_t seed)
        : config_(config)
    {
        config_.validate();
        Rng rng(seed);
        const std::size_t L = config_.levels();
        const std::size_t k = config_.kernel;
        level_sizes_.push_back({config_.height, config_.width});
        for (std::size_t i = 1; i < L; ++i) {
            level_sizes_.push_back({level_sizes_.back().first / 2, level_sizes_.back().second / 2});
        }
        for (std::size_t i = 0; i < L; ++i) {
            nn::Sequential<T> block;
            if (i > 0) {
                block.template emplace<nn::MaxPool2d<T>>();
            }
            const std::size_t in = i == 0 ? config_.in_channels() : config_.widths[i - 1];
            add_double_conv(block, in, config_.widths[i], k, rng);
            down_.push_back(std::move(block));
        }
        for (std::size_t j = 0; j + 1 < L; ++j) {
            const std::size_t from = L - 1 - j;
            const std::size_t to = from - 1;
            nn::Sequential<T> up;
            up.template emplace<nn::UpsampleConv2d<T>>(config_.widths[from], config_.widths[to], k,
                                                       level_sizes_[to].first, level_sizes_[to].second, rng);
            up.template emplace<nn::BatchNorm2d<T>>(config_.widths[to]);
            up.template emplace<nn::ReLU<T>>();
            upsample_.push_back(std::move(up));
            nn::Sequential<T> merge;
            add_double_conv(merge, 2 * config_.widths[to], config_.widths[to], k, rng);
            merge_.push_back(std::move(merge));
        }
        out_.template emplace<nn::Conv2d<T>>(config_.widths[0], config_.n_drones, 1, 1, 1, rng);
        out_.template emplace<nn::Sigmoid<T>>();
    }

    const GeneratorConfig& config() const { return config_; }

    Shape input_shape(std::size_t batch) const { return {batch, config_.in_channels(), config_.height, config_.width}; }
    Shape output_shape(std::size_t batch) const { return {batch, config_.n_drones, config_.height, config_.width}; }

    /// Input is the depth-wise concatenation of the environment (1 channel) and the
    /// experience map (n_drones channels).
    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, Cache& cache)
    {
        if (input.rank() != 4 || input.shape() != input_shape(input.dim(0))) {
            throw ShapeError("generator: expected input " + nn::shape_string(input_shape(input.rank() ? input.dim(0) : 1))
                             + ", got " + nn::shape_string(input.shape()));
        }
        const std::size_t L = config_.levels();
        if (ctx.frozen_pattern) {
            require(cache.down.size() == L && cache.merge.size() == L - 1, "generator: frozen pattern needs a full cache");
        } else {
            cache.down.assign(L, {});
            cache.upsample.assign(L - 1, {});
            cache.merge.assign(L - 1, {});
        }
        std::vector<BasicTensor<T>> skips;
        BasicTensor<T> x = input;
        for (std::size_t i = 0; i < L; ++i) {
            x = down_[i].forward(x, ctx, cache.down[i]);
            skips.push_back(x);
        }
        for (std::size_t j = 0; j + 1 < L; ++j) {
            const std::size_t to = L - 2 - j;
            const BasicTensor<T> up = upsample_[j].forward(x, ctx, cache.upsample[j]);
            x = merge_[j].forward(nn::concat_channels(skips[to], up), ctx, cache.merge[j]);
        }
        return out_.forward(x, ctx, cache.out);
    }

    BasicTensor<T> forward(const BasicTensor<T>& environment, const BasicTensor<T>& experience, const PassContext& ctx,
                           Cache& cache)
    {
        return forward(nn::concat_channels(environment, experience), ctx, cache);
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx)
    {
        Cache cache;
        return forward(input, ctx, cache);
    }

    /// Returns the input gradient; parameter gradients accumulate.
    BasicTensor<T> backward(const Cache& cache, const BasicTensor<T>& grad_output)
    {
        const std::size_t L = config_.levels();
        require(cache.down.size() == L && cache.merge.size() == L - 1, "generator backward: cache mismatch");
        std::vector<BasicTensor<T>> skip_grads(L);
        BasicTensor<T> g = out_.backward(cache.out, grad_output);
        for (std::size_t j = L - 1; j-- > 0;) {
            const std::size_t to = L - 2 - j;
            const BasicTensor<T> gm = merge_[j].backward(cache.merge[j], g);
            auto [g_skip, g_up] = nn::split_channels(gm, config_.widths[to]);
            skip_grads[to] = std::move(g_skip);
            g = upsample_[j].backward(cache.upsample[j], g_up);
        }
        for (std::size_t i = L; i-- > 0;) {
            if (!skip_grads[i].empty()) {
                g += skip_grads[i];
            }
            g = down_[i].backward(cache.down[i], g);
        }
        return g;
    }

    std::vector<nn::Parameter<T>> parameters()
    {
        std::vector<nn::Parameter<T>> out;
        visit([&](nn::Sequential<T>& s, const std::string& name) {
            auto p = s.parameters(name + ".");
            out.insert(out.end(), p.begin(), p.end());
        });
        return out;
    }

    std::vector<std::pair<std::string, BasicTensor<T>*>> buffers()
    {
        std::vector<std::pair<std::string, BasicTensor<T>*>> out;
        visit([&](nn::Sequential<T>& s, const std::string& name) {
            auto b = s.buffers(name + ".");
            out.insert(out.end(), b.begin(), b.end());
        });
        return out;
    }

    std::vector<nn::LayerSpec> specs()
    {
        std::vector<nn::LayerSpec> out;
        visit([&](nn::Sequential<T>& s, const std::string&) {
            auto v = s.specs();
            out.insert(out.end(), v.begin(), v.end());
        });
        return out;
    }

    void zero_grad()
    {
        visit([](nn::Sequential<T>& s, const std::string&) { s.zero_grad(); });
    }

    /// (block name, output shape) for Down 1..L, Up 1..L-1 and Out Conv, batch 1.
    std::vector<std::pair<std::string, Shape>> block_output_shapes() const
    {
        std::vector<std::pair<std::string, Shape>> out;
        const std::size_t L = config_.levels();
        Shape s = input_shape(1);
        std::vector<Shape> skips;
        for (std::size_t i = 0; i < L; ++i) {
            s = down_[i].output_shape(s);
            skips.push_back(s);
            out.emplace_back("Down " + std::to_string(i + 1), s);
        }
        for (std::size_t j = 0; j + 1 < L; ++j) {
            Shape up = upsample_[j].output_shape(s);
            Shape merged = skips[L - 2 - j];
            if (merged[2] != up[2] || merged[3] != up[3]) {
                throw ShapeError("generator: decoder size does not match skip connection");
            }
            merged[1] += up[1];
            s = merge_[j].output_shape(merged);
            out.emplace_back("Up " + std::to_string(j + 1), s);
        }
        out.emplace_back("Out Conv", out_.output_shape(s));
        return out;
    }

private:
    static void add_double_conv(nn::Sequential<T>& block, std::size_t in, std::size_t out, std::size_t k, Rng& rng)
    {
        block.template emplace<nn::Conv2d<T>>(in, out, k, k, 1, rng);
        block.template emplace<nn::BatchNorm2d<T>>(out);
        block.template emplace<nn::ReLU<T>>();
        block.template emplace<nn::Conv2d<T>>(out, out, k, k, 1, rng);
        block.template emplace<nn::BatchNorm2d<T>>(out);
        block.template emplace<nn::ReLU<T>>();
    }

    template <class Fn>
    void visit(Fn&& fn)
    {
        for (std::size_t i = 0; i < down_.size(); ++i) {
            fn(down_[i], "down" + std::to_string(i + 1));
        }
        for (std::size_t j = 0; j < upsample_.size(); ++j) {
            fn(upsample_[j], "up" + std::to_string(j + 1) + ".resize");
            fn(merge_[j], "up" + std::to_string(j + 1) + ".merge");
        }
        fn(out_, "out");
    }

    GeneratorConfig config_;
    std::vector<std::pair<std::size_t, std::size_t>> level_sizes_;
    std::vector<nn::Sequential<T>> down_, upsample_, merge_;
    nn::Sequential<T> out_;
};

using Generator = GeneratorT<float>;

} // namespace airgan::rrgan
