#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "airgan/core/error.hpp"
#include "airgan/core/rng.hpp"
#include "airgan/nn/tensor.hpp"

namespace airgan::nn {

enum class LayerKind { conv, upsample_conv, maxpool, batchnorm, fully_connected, relu, sigmoid, dropout };

inline const char* layer_kind_name(LayerKind k)
{
    switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::upsample_conv: return "upsample_conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::fully_connected: return "fully_connected";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::dropout: return "dropout";
    }
    return "?";
}

inline LayerKind layer_kind_from_name(const std::string& name)
{
    for (LayerKind k : {LayerKind::conv, LayerKind::upsample_conv, LayerKind::maxpool, LayerKind::batchnorm,
                        LayerKind::fully_connected, LayerKind::relu, LayerKind::sigmoid, LayerKind::dropout}) {
        if (name == layer_kind_name(k)) {
            return k;
        }
    }
    throw ConfigError("unknown layer kind '" + name + "'");
}

struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;
    std::size_t in_depth = 0;
    std::size_t out_depth = 0;
    double dropout_rate = 0.0;
    // upsample_conv resize target
    std::size_t target_h = 0;
    std::size_t target_w = 0;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Mode { train, eval };

struct PassContext {
    Mode mode = Mode::eval;
    /// When false, batchnorm running statistics are left untouched (probe passes).
    bool update_stats = true;
    /// Seed for dropout masks; identical seeds give identical masks.
    std::uint64_t noise_seed = 0;
    /// ReLU masks and max-pool selections are taken from the incoming caches (filled by an
    /// earlier pass over same-shaped inputs) instead of being recomputed. The pass is then
    /// smooth in the parameters, which finite-difference curvature probes need.
    bool frozen_pattern = false;
};

template <class T>
struct LayerCache {
    std::vector<BasicTensor<T>> tensors;
    std::vector<std::size_t> indices;
    Shape input_shape;
};

template <class T>
struct Parameter {
    std::string name;
    BasicTensor<T>* value = nullptr;
    BasicTensor<T>* grad = nullptr;
};

template <class T>
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerSpec spec() const = 0;
    virtual Shape output_shape(const Shape& input) const = 0;
    virtual BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) = 0;
    /// Returns the input gradient and accumulates parameter gradients.
    virtual BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_output) = 0;
    virtual std::unique_ptr<Layer> clone() const = 0;

    virtual std::vector<Parameter<T>> parameters() { return {}; }
    /// Non-trainable state saved in checkpoints (batchnorm running statistics).
    virtual std::vector<std::pair<std::string, BasicTensor<T>*>> buffers() { return {}; }

    void zero_grad()
    {
        for (auto& p : parameters()) {
            p.grad->fill(T{0});
        }
    }

    std::string name() const { return layer_kind_name(spec().kind); }
    void set_salt(std::uint64_t salt) { salt_ = salt; }
    std::uint64_t salt() const { return salt_; }

protected:
    void check_rank(const Shape& s, std::size_t rank) const
    {
        if (s.size() != rank) {
            throw ShapeError(name() + ": expected rank-" + std::to_string(rank) + " input, got " + shape_string(s));
        }
    }
    void check_cache(const LayerCache<T>& cache, std::size_t tensors) const
    {
        if (cache.tensors.size() < tensors) {
            throw ShapeError(name() + ": backward called with a cache from a different layer");
        }
    }

private:
    std::uint64_t salt_ = 0;
};

namespace detail {

template <class T>
void fan_in_uniform(BasicTensor<T>& w, std::size_t fan_in, Rng& rng)
{
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (T& v : w.data()) {
        v = static_cast<T>(dist(rng));
    }
}

// Reusable per-thread buffer; contents are unspecified on return.
template <class T>
T* scratch_buffer(std::size_t n, std::size_t slot)
{
    thread_local std::vector<AlignedVector<T>> buffers(2);
    AlignedVector<T>& b = buffers[slot];
    if (b.size() < n) {
        b.resize(n);
    }
    return b.data();
}

} // namespace detail

/// 2-d convolution, zero padded so stride-1 output keeps the input size: odd kernels pad
/// (k-1)/2 on each side, even kernels pad (k-1)/2 left/top and k/2 right/bottom.
/// Evaluated as im2col followed by a matrix product.
template <class T>
class Conv2d final : public Layer<T> {
public:
    Conv2d(std::size_t in_depth, std::size_t out_depth, std::size_t kernel_h, std::size_t kernel_w,
           std::size_t stride, Rng& rng)
        : in_(in_depth)
        , out_(out_depth)
        , kh_(kernel_h)
        , kw_(kernel_w)
        , stride_(stride)
        , pad_top_((kernel_h - 1) / 2)
        , pad_left_((kernel_w - 1) / 2)
        , pad_bottom_(kernel_h - 1 - (kernel_h - 1) / 2)
        , pad_right_(kernel_w - 1 - (kernel_w - 1) / 2)
        , weight_({out_depth, in_depth, kernel_h, kernel_w})
        , bias_({out_depth})
        , grad_weight_(weight_.shape())
        , grad_bias_(bias_.shape())
    {
        if (in_depth == 0 || out_depth == 0 || kernel_h == 0 || kernel_w == 0 || stride == 0) {
            throw ConfigError("conv: depths, kernel and stride must be positive");
        }
        detail::fan_in_uniform(weight_, in_depth * kernel_h * kernel_w, rng);
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::conv;
        s.kernel_h = kh_;
        s.kernel_w = kw_;
        s.stride = stride_;
        s.in_depth = in_;
        s.out_depth = out_;
        return s;
    }

    Shape output_shape(const Shape& in) const override
    {
        this->check_rank(in, 4);
        if (in[1] != in_) {
            throw ShapeError("conv: expected " + std::to_string(in_) + " input channels, got " + shape_string(in));
        }
        return {in[0], out_, out_extent(in[2], kh_, pad_top_, pad_bottom_), out_extent(in[3], kw_, pad_left_, pad_right_)};
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext&, LayerCache<T>& cache) override
    {
        const Shape os = output_shape(input.shape());
        BasicTensor<T> out(os);
        const std::size_t N = input.dim(0), H = input.dim(2), W = input.dim(3), P = os[2] * os[3];
        const std::size_t K = in_ * kh_ * kw_;
        T* col = detail::scratch_buffer<T>(K * P, 0);
        const ConstMatrix w(weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
        const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias_.raw(), static_cast<Eigen::Index>(out_));
        for (std::size_t n = 0; n < N; ++n) {
            im2col(input.raw() + n * in_ * H * W, H, W, os[2], os[3], col);
            const ConstMatrix c(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
            MutableMatrix o(out.raw() + n * out_ * P, static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(P));
            o.noalias() = w * c;
            o.colwise() += b;
        }
        cache.input_shape = input.shape();
        cache.tensors.assign(1, input);
        debug_check_finite(out, "conv forward");
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 1);
        const BasicTensor<T>& input = cache.tensors[0];
        const Shape os = output_shape(input.shape());
        if (grad_out.shape() != os) {
            throw ShapeError("conv backward: gradient shape " + shape_string(grad_out.shape()) + " vs output "
                             + shape_string(os));
        }
        BasicTensor<T> grad_in(input.shape());
        const std::size_t N = input.dim(0), H = input.dim(2), W = input.dim(3), P = os[2] * os[3];
        const std::size_t K = in_ * kh_ * kw_;
        T* col = detail::scratch_buffer<T>(K * P, 0);
        T* grad_col = detail::scratch_buffer<T>(K * P, 1);
        const ConstMatrix w(weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
        MutableMatrix gw(grad_weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(K));
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(grad_bias_.raw(), static_cast<Eigen::Index>(out_));
        for (std::size_t n = 0; n < N; ++n) {
            im2col(input.raw() + n * in_ * H * W, H, W, os[2], os[3], col);
            const ConstMatrix c(col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
            const ConstMatrix g(grad_out.raw() + n * out_ * P, static_cast<Eigen::Index>(out_),
                                static_cast<Eigen::Index>(P));
            gw.noalias() += g * c.transpose();
            gb += g.rowwise().sum();
            MutableMatrix gc(grad_col, static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
            gc.noalias() = w.transpose() * g;
            col2im(grad_col, H, W, os[2], os[3], grad_in.raw() + n * in_ * H * W);
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

    std::vector<Parameter<T>> parameters() override
    {
        return {{"weight", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
    }

    BasicTensor<T>& weight() { return weight_; }
    BasicTensor<T>& bias() { return bias_; }

private:
    using ConstMatrix = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using MutableMatrix = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    std::size_t out_extent(std::size_t in, std::size_t k, std::size_t pa, std::size_t pb) const
    {
        if (in + pa + pb < k) {
            throw ShapeError("conv: input extent " + std::to_string(in) + " smaller than kernel");
        }
        return (in + pa + pb - k) / stride_ + 1;
    }

    // Output columns [lo, hi) whose input column ow*stride + kx - pad_left lies in [0, W).
    std::pair<std::size_t, std::size_t> column_range(std::size_t kx, std::size_t W, std::size_t Wo) const
    {
        std::size_t lo = 0;
        if (kx < pad_left_) {
            lo = (pad_left_ - kx + stride_ - 1) / stride_;
        }
        const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(W) - 1 + static_cast<std::ptrdiff_t>(pad_left_)
            - static_cast<std::ptrdiff_t>(kx);
        if (last < 0) {
            return {0, 0};
        }
        const std::size_t hi = std::min(Wo, static_cast<std::size_t>(last) / stride_ + 1);
        return {std::min(lo, hi), hi};
    }

    // Patch matrix row (ic, ky, kx), column (oh, ow); `Scatter` selects col2im.
    template <bool Scatter>
    void patches(T* image, T* col, std::size_t H, std::size_t W, std::size_t Ho, std::size_t Wo) const
    {
        for (std::size_t ic = 0; ic < in_; ++ic) {
            T* plane = image + ic * H * W;
            for (std::size_t ky = 0; ky < kh_; ++ky) {
                for (std::size_t kx = 0; kx < kw_; ++kx) {
                    T* row = col + ((ic * kh_ + ky) * kw_ + kx) * Ho * Wo;
                    const auto [lo, hi] = column_range(kx, W, Wo);
                    for (std::size_t oh = 0; oh < Ho; ++oh) {
                        T* dst = row + oh * Wo;
                        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * stride_ + ky)
                            - static_cast<std::ptrdiff_t>(pad_top_);
                        if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H) || lo >= hi) {
                            if constexpr (!Scatter) {
                                std::fill(dst, dst + Wo, T{0});
                            }
                            continue;
                        }
                        T* src = plane + static_cast<std::size_t>(ih) * W + lo * stride_ + kx - pad_left_;
                        if constexpr (Scatter) {
                            for (std::size_t ow = lo; ow < hi; ++ow) {
                                src[(ow - lo) * stride_] += dst[ow];
                            }
                        } else {
                            std::fill(dst, dst + lo, T{0});
                            if (stride_ == 1) {
                                std::copy(src, src + (hi - lo), dst + lo);
                            } else {
                                for (std::size_t ow = lo; ow < hi; ++ow) {
                                    dst[ow] = src[(ow - lo) * stride_];
                                }
                            }
                            std::fill(dst + hi, dst + Wo, T{0});
                        }
                    }
                }
            }
        }
    }

    void im2col(const T* image, std::size_t H, std::size_t W, std::size_t Ho, std::size_t Wo, T* col) const
    {
        patches<false>(const_cast<T*>(image), col, H, W, Ho, Wo);
    }

    void col2im(const T* col, std::size_t H, std::size_t W, std::size_t Ho, std::size_t Wo, T* image) const
    {
        patches<true>(image, const_cast<T*>(col), H, W, Ho, Wo);
    }

    std::size_t in_, out_, kh_, kw_, stride_;
    std::size_t pad_top_, pad_left_, pad_bottom_, pad_right_;
    BasicTensor<T> weight_, bias_, grad_weight_, grad_bias_;
};

/// Nearest-neighbour resize to a fixed target size followed by a convolution.
template <class T>
class UpsampleConv2d final : public Layer<T> {
public:
    UpsampleConv2d(std::size_t in_depth, std::size_t out_depth, std::size_t kernel, std::size_t target_h,
                   std::size_t target_w, Rng& rng)
        : conv_(in_depth, out_depth, kernel, kernel, 1, rng)
        , target_h_(target_h)
        , target_w_(target_w)
    {
        if (target_h == 0 || target_w == 0) {
            throw ConfigError("upsample_conv: target size must be positive");
        }
    }

    LayerSpec spec() const override
    {
        LayerSpec s = conv_.spec();
        s.kind = LayerKind::upsample_conv;
        s.target_h = target_h_;
        s.target_w = target_w_;
        return s;
    }

    Shape output_shape(const Shape& in) const override
    {
        this->check_rank(in, 4);
        return conv_.output_shape({in[0], in[1], target_h_, target_w_});
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) override
    {
        this->check_rank(input.shape(), 4);
        const std::size_t N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
        BasicTensor<T> resized({N, C, target_h_, target_w_});
        for (std::size_t p = 0; p < N * C; ++p) {
            const T* src = input.raw() + p * H * W;
            T* dst = resized.raw() + p * target_h_ * target_w_;
            for (std::size_t y = 0; y < target_h_; ++y) {
                const std::size_t sy = y * H / target_h_;
                for (std::size_t x = 0; x < target_w_; ++x) {
                    dst[y * target_w_ + x] = src[sy * W + x * W / target_w_];
                }
            }
        }
        LayerCache<T> inner;
        BasicTensor<T> out = conv_.forward(resized, ctx, inner);
        cache.input_shape = input.shape();
        cache.tensors = std::move(inner.tensors);
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 1);
        LayerCache<T> inner;
        inner.tensors = cache.tensors;
        const BasicTensor<T> grad_resized = conv_.backward(inner, grad_out);
        const Shape& is = cache.input_shape;
        BasicTensor<T> grad_in(is);
        const std::size_t N = is[0], C = is[1], H = is[2], W = is[3];
        for (std::size_t p = 0; p < N * C; ++p) {
            const T* src = grad_resized.raw() + p * target_h_ * target_w_;
            T* dst = grad_in.raw() + p * H * W;
            for (std::size_t y = 0; y < target_h_; ++y) {
                const std::size_t sy = y * H / target_h_;
                for (std::size_t x = 0; x < target_w_; ++x) {
                    dst[sy * W + x * W / target_w_] += src[y * target_w_ + x];
                }
            }
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<UpsampleConv2d>(*this); }
    std::vector<Parameter<T>> parameters() override { return conv_.parameters(); }

private:
    Conv2d<T> conv_;
    std::size_t target_h_, target_w_;
};

/// 2x2 max pooling with stride 2; odd extents are floored.
template <class T>
class MaxPool2d final : public Layer<T> {
public:
    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::maxpool;
        s.kernel_h = 2;
        s.kernel_w = 2;
        s.stride = 2;
        return s;
    }

    Shape output_shape(const Shape& in) const override
    {
        this->check_rank(in, 4);
        if (in[2] < 2 || in[3] < 2) {
            throw ShapeError("maxpool: input " + shape_string(in) + " smaller than the 2x2 window");
        }
        return {in[0], in[1], in[2] / 2, in[3] / 2};
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) override
    {
        const Shape os = output_shape(input.shape());
        BasicTensor<T> out(os);
        if (ctx.frozen_pattern) {
            if (cache.indices.size() != out.size() || cache.input_shape != input.shape()) {
                throw ShapeError("maxpool: frozen pattern does not match input " + shape_string(input.shape()));
            }
            for (std::size_t o = 0; o < out.size(); ++o) {
                out[o] = input[cache.indices[o]];
            }
            return out;
        }
        const std::size_t H = input.dim(2), W = input.dim(3), Ho = os[2], Wo = os[3];
        cache.indices.assign(out.size(), 0);
        for (std::size_t p = 0; p < os[0] * os[1]; ++p) {
            const std::size_t base = p * H * W;
            for (std::size_t y = 0; y < Ho; ++y) {
                for (std::size_t x = 0; x < Wo; ++x) {
                    std::size_t best = base + 2 * y * W + 2 * x;
                    for (std::size_t dy = 0; dy < 2; ++dy) {
                        for (std::size_t dx = 0; dx < 2; ++dx) {
                            const std::size_t i = base + (2 * y + dy) * W + 2 * x + dx;
                            if (input[i] > input[best]) {
                                best = i;
                            }
                        }
                    }
                    const std::size_t o = (p * Ho + y) * Wo + x;
                    out[o] = input[best];
                    cache.indices[o] = best;
                }
            }
        }
        cache.input_shape = input.shape();
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        if (cache.indices.size() != grad_out.size()) {
            throw ShapeError("maxpool backward: cache does not match gradient");
        }
        BasicTensor<T> grad_in(cache.input_shape);
        for (std::size_t o = 0; o < grad_out.size(); ++o) {
            grad_in[cache.indices[o]] += grad_out[o];
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }
};

/// Per-channel batch normalisation over (N, H, W); rank-2 inputs are treated as H = W = 1.
/// Running statistics use momentum 0.9 (fraction of the old value kept).
template <class T>
class BatchNorm2d final : public Layer<T> {
public:
    explicit BatchNorm2d(std::size_t channels, double momentum = 0.9, double epsilon = 1e-5)
        : channels_(channels)
        , momentum_(momentum)
        , epsilon_(epsilon)
        , gamma_({channels}, T{1})
        , beta_({channels}, T{0})
        , grad_gamma_({channels})
        , grad_beta_({channels})
        , running_mean_({channels}, T{0})
        , running_var_({channels}, T{1})
    {
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::batchnorm;
        s.in_depth = channels_;
        s.out_depth = channels_;
        return s;
    }

    Shape output_shape(const Shape& in) const override
    {
        if ((in.size() != 4 && in.size() != 2) || in[1] != channels_) {
            throw ShapeError("batchnorm: expected " + std::to_string(channels_) + " channels, got " + shape_string(in));
        }
        return in;
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) override
    {
        output_shape(input.shape());
        const std::size_t N = input.dim(0), C = channels_;
        const std::size_t plane = input.rank() == 4 ? input.dim(2) * input.dim(3) : 1;
        const std::size_t m = N * plane;
        BasicTensor<T> out(input.shape());
        BasicTensor<T> xhat(input.shape());
        BasicTensor<T> inv_std({C});
        const bool train = ctx.mode == Mode::train;
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0, var = 0.0;
            if (train) {
                for (std::size_t n = 0; n < N; ++n) {
                    const T* x = input.raw() + (n * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        mean += x[i];
                    }
                }
                mean /= static_cast<double>(m);
                for (std::size_t n = 0; n < N; ++n) {
                    const T* x = input.raw() + (n * C + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        const double d = x[i] - mean;
                        var += d * d;
                    }
                }
                var /= static_cast<double>(m);
                if (ctx.update_stats) {
                    const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
                    running_mean_[c] = static_cast<T>(momentum_ * running_mean_[c] + (1.0 - momentum_) * mean);
                    running_var_[c] = static_cast<T>(momentum_ * running_var_[c] + (1.0 - momentum_) * unbiased);
                }
            } else {
                mean = running_mean_[c];
                var = running_var_[c];
            }
            const T is = static_cast<T>(1.0 / std::sqrt(var + epsilon_));
            inv_std[c] = is;
            const T mu = static_cast<T>(mean);
            for (std::size_t n = 0; n < N; ++n) {
                const std::size_t off = (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const T xh = (input[off + i] - mu) * is;
                    xhat[off + i] = xh;
                    out[off + i] = gamma_[c] * xh + beta_[c];
                }
            }
        }
        cache.input_shape = input.shape();
        cache.tensors = {std::move(xhat), std::move(inv_std)};
        cache.indices = {train ? std::size_t{1} : std::size_t{0}};
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 2);
        const BasicTensor<T>& xhat = cache.tensors[0];
        const BasicTensor<T>& inv_std = cache.tensors[1];
        xhat.require_same_shape(grad_out, "batchnorm backward");
        const bool train = !cache.indices.empty() && cache.indices[0] == 1;
        const std::size_t N = xhat.dim(0), C = channels_;
        const std::size_t plane = xhat.rank() == 4 ? xhat.dim(2) * xhat.dim(3) : 1;
        const double m = static_cast<double>(N * plane);
        BasicTensor<T> grad_in(xhat.shape());
        for (std::size_t c = 0; c < C; ++c) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const std::size_t off = (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_g += grad_out[off + i];
                    sum_gx += grad_out[off + i] * xhat[off + i];
                }
            }
            grad_gamma_[c] += static_cast<T>(sum_gx);
            grad_beta_[c] += static_cast<T>(sum_g);
            const double scale = static_cast<double>(gamma_[c]) * inv_std[c];
            for (std::size_t n = 0; n < N; ++n) {
                const std::size_t off = (n * C + c) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    if (train) {
                        grad_in[off + i] = static_cast<T>(
                            scale / m * (m * grad_out[off + i] - sum_g - xhat[off + i] * sum_gx));
                    } else {
                        grad_in[off + i] = static_cast<T>(scale * grad_out[off + i]);
                    }
                }
            }
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<BatchNorm2d>(*this); }

    std::vector<Parameter<T>> parameters() override
    {
        return {{"gamma", &gamma_, &grad_gamma_}, {"beta", &beta_, &grad_beta_}};
    }

    std::vector<std::pair<std::string, BasicTensor<T>*>> buffers() override
    {
        return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
    }

    const BasicTensor<T>& running_mean() const { return running_mean_; }
    const BasicTensor<T>& running_var() const { return running_var_; }

private:
    std::size_t channels_;
    double momentum_, epsilon_;
    BasicTensor<T> gamma_, beta_, grad_gamma_, grad_beta_, running_mean_, running_var_;
};

/// Dense layer; any input is flattened to (N, features).
template <class T>
class Linear final : public Layer<T> {
public:
    Linear(std::size_t in_features, std::size_t out_features, Rng& rng)
        : in_(in_features)
        , out_(out_features)
        , weight_({out_features, in_features})
        , bias_({out_features})
        , grad_weight_(weight_.shape())
        , grad_bias_(bias_.shape())
    {
        if (in_features == 0 || out_features == 0) {
            throw ConfigError("fully_connected: feature counts must be positive");
        }
        detail::fan_in_uniform(weight_, in_features, rng);
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::fully_connected;
        s.in_depth = in_;
        s.out_depth = out_;
        return s;
    }

    Shape output_shape(const Shape& in) const override
    {
        if (in.empty() || shape_size(in) / in[0] != in_) {
            throw ShapeError("fully_connected: expected " + std::to_string(in_) + " features per sample, got "
                             + shape_string(in));
        }
        return {in[0], out_};
    }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext&, LayerCache<T>& cache) override
    {
        const Shape os = output_shape(input.shape());
        BasicTensor<T> out(os);
        const auto N = static_cast<Eigen::Index>(os[0]);
        const ConstMatrix x(input.raw(), N, static_cast<Eigen::Index>(in_));
        const ConstMatrix w(weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        const Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.raw(), static_cast<Eigen::Index>(out_));
        MutableMatrix o(out.raw(), N, static_cast<Eigen::Index>(out_));
        o.noalias() = x * w.transpose();
        o.rowwise() += b;
        cache.input_shape = input.shape();
        cache.tensors.assign(1, input);
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 1);
        const BasicTensor<T>& input = cache.tensors[0];
        const std::size_t N = input.dim(0);
        if (grad_out.shape() != Shape{N, out_}) {
            throw ShapeError("fully_connected backward: gradient shape " + shape_string(grad_out.shape()));
        }
        BasicTensor<T> grad_in(input.shape());
        const auto n = static_cast<Eigen::Index>(N);
        const ConstMatrix x(input.raw(), n, static_cast<Eigen::Index>(in_));
        const ConstMatrix g(grad_out.raw(), n, static_cast<Eigen::Index>(out_));
        const ConstMatrix w(weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        MutableMatrix gw(grad_weight_.raw(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
        Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> gb(grad_bias_.raw(), static_cast<Eigen::Index>(out_));
        MutableMatrix gx(grad_in.raw(), n, static_cast<Eigen::Index>(in_));
        gw.noalias() += g.transpose() * x;
        gb += g.colwise().sum();
        gx.noalias() = g * w;
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Linear>(*this); }

    std::vector<Parameter<T>> parameters() override
    {
        return {{"weight", &weight_, &grad_weight_}, {"bias", &bias_, &grad_bias_}};
    }

    BasicTensor<T>& weight() { return weight_; }
    BasicTensor<T>& bias() { return bias_; }

private:
    using ConstMatrix = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using MutableMatrix = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    std::size_t in_, out_;
    BasicTensor<T> weight_, bias_, grad_weight_, grad_bias_;
};

template <class T>
class ReLU final : public Layer<T> {
public:
    LayerSpec spec() const override { return {LayerKind::relu}; }
    Shape output_shape(const Shape& in) const override { return in; }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) override
    {
        BasicTensor<T> out = input;
        if (ctx.frozen_pattern) {
            this->check_cache(cache, 1);
            cache.tensors[0].require_same_shape(input, "relu frozen pattern");
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] = cache.tensors[0][i] > T{0} ? out[i] : T{0};
            }
            return out;
        }
        for (T& v : out.data()) {
            v = v > T{0} ? v : T{0};
        }
        cache.input_shape = input.shape();
        cache.tensors.assign(1, input);
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 1);
        const BasicTensor<T>& input = cache.tensors[0];
        input.require_same_shape(grad_out, "relu backward");
        BasicTensor<T> grad_in(input.shape());
        for (std::size_t i = 0; i < input.size(); ++i) {
            grad_in[i] = input[i] > T{0} ? grad_out[i] : T{0};
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ReLU>(*this); }
};

template <class T>
class Sigmoid final : public Layer<T> {
public:
    LayerSpec spec() const override { return {LayerKind::sigmoid}; }
    Shape output_shape(const Shape& in) const override { return in; }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext&, LayerCache<T>& cache) override
    {
        BasicTensor<T> out = input;
        for (T& v : out.data()) {
            v = T{1} / (T{1} + std::exp(-v));
        }
        cache.input_shape = input.shape();
        cache.tensors.assign(1, out);
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        this->check_cache(cache, 1);
        const BasicTensor<T>& y = cache.tensors[0];
        y.require_same_shape(grad_out, "sigmoid backward");
        BasicTensor<T> grad_in(y.shape());
        for (std::size_t i = 0; i < y.size(); ++i) {
            grad_in[i] = grad_out[i] * y[i] * (T{1} - y[i]);
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sigmoid>(*this); }
};

/// Inverted dropout: active in train mode only, survivors scaled by 1/(1-rate).
template <class T>
class Dropout final : public Layer<T> {
public:
    explicit Dropout(double rate)
        : rate_(rate)
    {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ConfigError("dropout: rate must lie in [0, 1)");
        }
    }

    LayerSpec spec() const override
    {
        LayerSpec s;
        s.kind = LayerKind::dropout;
        s.dropout_rate = rate_;
        return s;
    }
    Shape output_shape(const Shape& in) const override { return in; }

    BasicTensor<T> forward(const BasicTensor<T>& input, const PassContext& ctx, LayerCache<T>& cache) override
    {
        cache.input_shape = input.shape();
        cache.tensors.clear();
        if (ctx.mode != Mode::train || rate_ == 0.0) {
            return input;
        }
        Rng rng(mix_seed(ctx.noise_seed, this->salt()));
        std::bernoulli_distribution keep(1.0 - rate_);
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        BasicTensor<T> mask(input.shape());
        BasicTensor<T> out(input.shape());
        for (std::size_t i = 0; i < input.size(); ++i) {
            mask[i] = keep(rng) ? scale : T{0};
            out[i] = input[i] * mask[i];
        }
        cache.tensors.push_back(std::move(mask));
        return out;
    }

    BasicTensor<T> backward(const LayerCache<T>& cache, const BasicTensor<T>& grad_out) override
    {
        if (cache.tensors.empty()) {
            return grad_out;
        }
        const BasicTensor<T>& mask = cache.tensors[0];
        mask.require_same_shape(grad_out, "dropout backward");
        BasicTensor<T> grad_in(mask.shape());
        for (std::size_t i = 0; i < mask.size(); ++i) {
            grad_in[i] = grad_out[i] * mask[i];
        }
        return grad_in;
    }

    std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

private:
    double rate_;
};

/// Builds a freshly initialised layer from its spec.
template <class T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s, Rng& rng)
{
    switch (s.kind) {
    case LayerKind::conv:
        return std::make_unique<Conv2d<T>>(s.in_depth, s.out_depth, s.kernel_h, s.kernel_w, s.stride, rng);
    case LayerKind::upsample_conv:
        return std::make_unique<UpsampleConv2d<T>>(s.in_depth, s.out_depth, s.kernel_h, s.target_h, s.target_w, rng);
    case LayerKind::maxpool: return std::make_unique<MaxPool2d<T>>();
    case LayerKind::batchnorm: return std::make_unique<BatchNorm2d<T>>(s.out_depth);
    case LayerKind::fully_connected: return std::make_unique<Linear<T>>(s.in_depth, s.out_depth, rng);
    case LayerKind::relu: return std::make_unique<ReLU<T>>();
    case LayerKind::sigmoid: return std::make_unique<Sigmoid<T>>();
    case LayerKind::dropout: return std::make_unique<Dropout<T>>(s.dropout_rate);
    }
    throw ConfigError("make_layer: unknown kind");
}

} // namespace airgan::nn
