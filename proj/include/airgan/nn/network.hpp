#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "airgan/nn/layers.hpp"

namespace airgan::nn {

/// Ordered stack of layers with deep-copy semantics.
template <class T>
class Sequential {
public:
    Sequential() = default;
    Sequential(const Sequential& other) { copy_from(other); }
    Sequential& operator=(const Sequential& other)
    {
        if (this != &other) {
            copy_from(other);
        }
        return *this;
    }
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    /// Layers get dropout salts salt_base + position.
    explicit Sequential(std::uint64_t salt_base)
        : salt_base_(salt_base)
    {
    }

    Layer<T>& add(std::unique_ptr<Layer<T>> layer)
    {
        layer->set_salt(salt_base_ + layers_.size());
        layers_.push_back(std::move(layer));
        return *layers_.back();
    }

    template <class L, class... Args>
    L& emplace(Args&&... args)
    {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        L& ref = *layer;
        add(std::move(layer));
        return ref;
    }

    std::size_t size() const { return layers_.size(); }
    bool empty() const { return layers_.empty(); }
    Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
    const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

    std::vector<LayerSpec> specs() const
    {
        std::vector<LayerSpec> out;
        for (const auto& l : layers_) {
            out.push_back(l->spec());
        }
        return out;
    }

    Shape output_shape(Shape in) const
    {
        for (const auto& l : layers_) {
            in = l->output_shape(in);
        }
        return in;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, std::vector<LayerCache<T>>& caches)
    {
        if (ctx.frozen_pattern) {
            require(caches.size() == layers_.size(), "sequential forward: frozen pattern needs a full cache");
        } else {
            caches.assign(layers_.size(), {});
        }
        BasicTensor<T> x = input;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            x = layers_[i]->forward(x, ctx, caches[i]);
        }
        return x;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx)
    {
        std::vector<LayerCache<T>> caches;
        return forward(input, ctx, caches);
    }

    BasicTensor<T> backward(const std::vector<LayerCache<T>>& caches, const BasicTensor<T>& grad_output)
    {
        require(caches.size() == layers_.size(), "sequential backward: cache count mismatch");
        BasicTensor<T> g = grad_output;
        for (std::size_t i = layers_.size(); i-- > 0;) {
            g = layers_[i]->backward(caches[i], g);
        }
        return g;
    }

    std::vector<Parameter<T>> parameters(const std::string& prefix = "")
    {
        std::vector<Parameter<T>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            for (auto& p : layers_[i]->parameters()) {
                p.name = prefix + std::to_string(i) + "." + layers_[i]->name() + "." + p.name;
                out.push_back(p);
            }
        }
        return out;
    }

    std::vector<std::pair<std::string, BasicTensor<T>*>> buffers(const std::string& prefix = "")
    {
        std::vector<std::pair<std::string, BasicTensor<T>*>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            for (auto& [name, t] : layers_[i]->buffers()) {
                out.emplace_back(prefix + std::to_string(i) + "." + layers_[i]->name() + "." + name, t);
            }
        }
        return out;
    }

    void zero_grad()
    {
        for (auto& l : layers_) {
            l->zero_grad();
        }
    }

private:
    void copy_from(const Sequential& other)
    {
        salt_base_ = other.salt_base_;
        layers_.clear();
        for (const auto& l : other.layers_) {
            layers_.push_back(l->clone());
        }
    }

    std::uint64_t salt_base_ = 0;
    std::vector<std::unique_ptr<Layer<T>>> layers_;
};

template <class T>
std::size_t parameter_count(const std::vector<Parameter<T>>& params)
{
    std::size_t n = 0;
    for (const auto& p : params) {
        n += p.value->size();
    }
    return n;
}

/// Copies values (not gradients) between structurally identical parameter lists.
template <class T>
void copy_parameter_values(const std::vector<Parameter<T>>& from, const std::vector<Parameter<T>>& to)
{
    require(from.size() == to.size(), "copy_parameter_values: parameter count mismatch");
    for (std::size_t i = 0; i < from.size(); ++i) {
        from[i].value->require_same_shape(*to[i].value, "copy_parameter_values");
        *to[i].value = *from[i].value;
    }
}

template <class T>
void zero_gradients(const std::vector<Parameter<T>>& params)
{
    for (const auto& p : params) {
        p.grad->fill(T{0});
    }
}

} // namespace airgan::nn
