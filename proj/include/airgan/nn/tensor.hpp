#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "airgan/core/error.hpp"

namespace airgan::nn {

using Shape = std::vector<std::size_t>;

/// Every buffer starts on a SIMD boundary. Eigen picks its vectorised head/tail split from
/// the runtime address, so unaligned bases make sums depend on where malloc put them.
template <class T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

inline std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

/// Dense row-major N-d array.
template <class T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(Shape shape, T fill = T{})
        : shape_(std::move(shape))
        , data_(shape_size(shape_), fill)
    {
    }
    BasicTensor(Shape shape, const std::vector<T>& data)
        : shape_(std::move(shape))
        , data_(data.begin(), data.end())
    {
        if (data_.size() != shape_size(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape "
                             + shape_string(shape_));
        }
    }

    template <class U>
    static BasicTensor cast(const BasicTensor<U>& other)
    {
        BasicTensor out(other.shape());
        std::transform(other.data().begin(), other.data().end(), out.data_.begin(),
                       [](U v) { return static_cast<T>(v); });
        return out;
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    T* raw() { return data_.data(); }
    const T* raw() const { return data_.data(); }
    AlignedVector<T>& storage() { return data_; }
    const AlignedVector<T>& storage() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    T operator[](std::size_t i) const { return data_[i]; }

    // NCHW accessors
    T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w)
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }
    T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const
    {
        return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    BasicTensor reshaped(Shape shape) const
    {
        if (shape_size(shape) != data_.size()) {
            throw ShapeError("cannot reshape " + shape_string(shape_) + " into " + shape_string(shape));
        }
        BasicTensor out = *this;
        out.shape_ = std::move(shape);
        return out;
    }

    BasicTensor& operator+=(const BasicTensor& other)
    {
        require_same_shape(other, "+=");
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += other.data_[i];
        }
        return *this;
    }

    BasicTensor& operator*=(T s)
    {
        for (T& v : data_) {
            v *= s;
        }
        return *this;
    }

    void require_same_shape(const BasicTensor& other, const char* what) const
    {
        if (other.shape_ != shape_) {
            throw ShapeError(std::string("tensor ") + what + ": shape " + shape_string(shape_) + " vs "
                             + shape_string(other.shape_));
        }
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    Shape shape_;
    AlignedVector<T> data_;
};

using Tensor = BasicTensor<float>;

template <class T>
inline void debug_check_finite([[maybe_unused]] const BasicTensor<T>& t, [[maybe_unused]] const char* where)
{
#ifndef NDEBUG
    if (!t.all_finite()) {
        throw NumericError(std::string("non-finite value after ") + where);
    }
#endif
}

/// Depth-wise concatenation of two NCHW tensors with equal N, H, W.
template <class T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b)
{
    if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw ShapeError("concat_channels: incompatible shapes " + shape_string(a.shape()) + " and "
                         + shape_string(b.shape()));
    }
    const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
    BasicTensor<T> out({n, ca + cb, a.dim(2), a.dim(3)});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(a.raw() + i * ca * plane, ca * plane, out.raw() + i * (ca + cb) * plane);
        std::copy_n(b.raw() + i * cb * plane, cb * plane, out.raw() + (i * (ca + cb) + ca) * plane);
    }
    return out;
}

/// Inverse of concat_channels: splits off the first `first_channels` channels.
template <class T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& t, std::size_t first_channels)
{
    const std::size_t n = t.dim(0), c = t.dim(1), plane = t.dim(2) * t.dim(3);
    const std::size_t cb = c - first_channels;
    BasicTensor<T> a({n, first_channels, t.dim(2), t.dim(3)});
    BasicTensor<T> b({n, cb, t.dim(2), t.dim(3)});
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(t.raw() + i * c * plane, first_channels * plane, a.raw() + i * first_channels * plane);
        std::copy_n(t.raw() + (i * c + first_channels) * plane, cb * plane, b.raw() + i * cb * plane);
    }
    return {std::move(a), std::move(b)};
}

/// Stacks equally shaped tensors along a new leading batch axis (dropping an existing
/// leading axis of size 1).
template <class T>
BasicTensor<T> stack_batch(std::span<const BasicTensor<T>* const> items)
{
    require(!items.empty(), "stack_batch: empty batch");
    Shape inner = items.front()->shape();
    if (!inner.empty() && inner.front() == 1) {
        inner.erase(inner.begin());
    }
    Shape shape{items.size()};
    shape.insert(shape.end(), inner.begin(), inner.end());
    BasicTensor<T> out(shape);
    const std::size_t stride = shape_size(inner);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i]->size() != stride) {
            throw ShapeError("stack_batch: item size mismatch");
        }
        std::copy_n(items[i]->raw(), stride, out.raw() + i * stride);
    }
    return out;
}

} // namespace airgan::nn
