#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <string>
#include <vector>

#include "cycleguard/error.hpp"

namespace cycleguard {

// Dense tensor shape, up to 4 axes. The layout convention throughout is
// batch x height x width x channels (channel-last); 2-D tensors are
// rows x cols, 1-D are flat vectors.
struct Shape {
    std::array<std::int64_t, 4> extent{1, 1, 1, 1};
    int rank = 0;

    Shape() = default;
    Shape(std::initializer_list<std::int64_t> dims) {
        if (dims.size() > 4) throw DimensionError("shape rank exceeds 4");
        rank = static_cast<int>(dims.size());
        int i = 0;
        for (auto d : dims) {
            if (d < 0) throw DimensionError("negative shape extent");
            extent[i++] = d;
        }
    }

    std::int64_t operator[](int axis) const { return extent[axis]; }

    std::int64_t count() const {
        std::int64_t n = 1;
        for (int i = 0; i < rank; ++i) n *= extent[i];
        return n;
    }

    bool operator==(const Shape& other) const {
        if (rank != other.rank) return false;
        for (int i = 0; i < rank; ++i)
            if (extent[i] != other.extent[i]) return false;
        return true;
    }
    bool operator!=(const Shape& other) const { return !(*this == other); }

    std::string str() const {
        std::string s = "(";
        for (int i = 0; i < rank; ++i) {
            if (i) s += "x";
            s += std::to_string(extent[i]);
        }
        return s + ")";
    }
};

// Contiguous row-major tensor of real values. 64-bit is the default
// precision; a 32-bit instantiation exists as a speed option.
template <class T>
class TensorT {
public:
    TensorT() = default;
    explicit TensorT(Shape shape) : shape_(shape), data_(static_cast<std::size_t>(shape.count()), T(0)) {}
    TensorT(Shape shape, std::vector<T> values) : shape_(shape), data_(std::move(values)) {
        if (static_cast<std::int64_t>(data_.size()) != shape_.count())
            throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                                 " does not match shape " + shape_.str());
    }

    static TensorT filled(Shape shape, T value) {
        TensorT t(shape);
        for (auto& v : t.data_) v = value;
        return t;
    }

    const Shape& shape() const { return shape_; }
    int rank() const { return shape_.rank; }
    std::int64_t dim(int axis) const { return shape_[axis]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-specific indexing; callers are expected to know the rank.
    T& at(std::int64_t b, std::int64_t h, std::int64_t w, std::int64_t c) {
        return data_[static_cast<std::size_t>(((b * shape_[1] + h) * shape_[2] + w) * shape_[3] + c)];
    }
    T at(std::int64_t b, std::int64_t h, std::int64_t w, std::int64_t c) const {
        return data_[static_cast<std::size_t>(((b * shape_[1] + h) * shape_[2] + w) * shape_[3] + c)];
    }
    T& at(std::int64_t r, std::int64_t c) { return data_[static_cast<std::size_t>(r * shape_[1] + c)]; }
    T at(std::int64_t r, std::int64_t c) const { return data_[static_cast<std::size_t>(r * shape_[1] + c)]; }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool bitwise_equal(const TensorT& other) const {
        // memcmp, not ==: distinguishes -0.0 from 0.0 and keeps NaN == NaN.
        return shape_ == other.shape_ &&
               (data_.empty() ||
                std::memcmp(data_.data(), other.data_.data(), data_.size() * sizeof(T)) == 0);
    }

    template <class U>
    TensorT<U> cast() const {
        std::vector<U> out(data_.size());
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return TensorT<U>(shape_, std::move(out));
    }

private:
    Shape shape_{};
    std::vector<T> data_;
};

using Tensor = TensorT<double>;

// NaN/Inf anywhere is a hard error, surfaced at op boundaries.
template <class T>
void require_finite(const TensorT<T>& t, const char* where) {
    if (!t.all_finite())
        throw NumericError(std::string(where) + ": tensor contains non-finite values");
}

}  // namespace cycleguard
