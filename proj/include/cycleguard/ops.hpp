#pragma once

#include <algorithm>
#include <cstdint>
#include <string>

#include "cycleguard/tensor.hpp"

namespace cycleguard {

enum class Padding { kSame, kValid };

// Geometry of one 2-D convolution. For half padding the output extent is
// ceil(in / stride); "valid" requires in >= kernel and floors.
struct ConvSpec {
    int kernel_h = 1;
    int kernel_w = 1;
    int stride_h = 1;
    int stride_w = 1;
    int filters = 1;
    Padding padding = Padding::kSame;
    // Declared output extents for transposed use. With stride > 1 the
    // inverse spatial shape is ambiguous; the model builder records the
    // mirrored encoder extents here. 0 means unresolved.
    int out_h = 0;
    int out_w = 0;
};

inline void validate_spec(const ConvSpec& spec, const char* where) {
    if (spec.kernel_h < 1 || spec.kernel_w < 1)
        throw DimensionError(std::string(where) + ": kernel extents must be >= 1");
    if (spec.stride_h < 1 || spec.stride_w < 1)
        throw DimensionError(std::string(where) + ": stride extents must be >= 1");
    if (spec.filters < 1)
        throw DimensionError(std::string(where) + ": filters must be >= 1");
}

struct ConvGeometry {
    std::int64_t out_h = 0, out_w = 0;
    std::int64_t pad_top = 0, pad_left = 0;
};

namespace detail {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

inline std::int64_t same_pad_begin(std::int64_t in, std::int64_t out, int k, int s) {
    std::int64_t total = std::max<std::int64_t>((out - 1) * s + k - in, 0);
    return total / 2;
}

}  // namespace detail

inline ConvGeometry conv_geometry(std::int64_t in_h, std::int64_t in_w, const ConvSpec& spec) {
    ConvGeometry g;
    if (spec.padding == Padding::kSame) {
        g.out_h = detail::ceil_div(in_h, spec.stride_h);
        g.out_w = detail::ceil_div(in_w, spec.stride_w);
        g.pad_top = detail::same_pad_begin(in_h, g.out_h, spec.kernel_h, spec.stride_h);
        g.pad_left = detail::same_pad_begin(in_w, g.out_w, spec.kernel_w, spec.stride_w);
    } else {
        if (in_h < spec.kernel_h || in_w < spec.kernel_w)
            throw DimensionError("conv: input " + std::to_string(in_h) + "x" + std::to_string(in_w) +
                                 " smaller than kernel with no padding");
        g.out_h = (in_h - spec.kernel_h) / spec.stride_h + 1;
        g.out_w = (in_w - spec.kernel_w) / spec.stride_w + 1;
    }
    return g;
}

namespace detail {

// x: (B,H,W,C) input space; y: (B,OH,OW,F) output space; w: (kh,kw,C,F).
// All three kernels walk the same index pairing; they differ only in which
// operand accumulates. Inner loops run contiguously over the filter axis.

template <class T>
void conv_gather(const T* x, T* y, const T* w, std::int64_t B, std::int64_t H, std::int64_t W,
                 std::int64_t C, std::int64_t OH, std::int64_t OW, std::int64_t F, const ConvSpec& spec,
                 std::int64_t pt, std::int64_t pl) {
    const int kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
    for (std::int64_t b = 0; b < B; ++b) {
        const T* xb = x + b * H * W * C;
        T* yb = y + b * OH * OW * F;
        for (std::int64_t oy = 0; oy < OH; ++oy) {
            for (std::int64_t ox = 0; ox < OW; ++ox) {
                T* yp = yb + (oy * OW + ox) * F;
                for (int ky = 0; ky < kh; ++ky) {
                    const std::int64_t iy = oy * sh + ky - pt;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const std::int64_t ix = ox * sw + kx - pl;
                        if (ix < 0 || ix >= W) continue;
                        const T* xp = xb + (iy * W + ix) * C;
                        const T* wp = w + (static_cast<std::int64_t>(ky) * kw + kx) * C * F;
                        for (std::int64_t c = 0; c < C; ++c) {
                            const T a = xp[c];
                            const T* wr = wp + c * F;
                            for (std::int64_t f = 0; f < F; ++f) yp[f] += a * wr[f];
                        }
                    }
                }
            }
        }
    }
}

// Adjoint of conv_gather: scatters y back into x space.
template <class T>
void conv_scatter(T* x, const T* y, const T* w, std::int64_t B, std::int64_t H, std::int64_t W,
                  std::int64_t C, std::int64_t OH, std::int64_t OW, std::int64_t F, const ConvSpec& spec,
                  std::int64_t pt, std::int64_t pl) {
    const int kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
    for (std::int64_t b = 0; b < B; ++b) {
        T* xb = x + b * H * W * C;
        const T* yb = y + b * OH * OW * F;
        for (std::int64_t oy = 0; oy < OH; ++oy) {
            for (std::int64_t ox = 0; ox < OW; ++ox) {
                const T* yp = yb + (oy * OW + ox) * F;
                for (int ky = 0; ky < kh; ++ky) {
                    const std::int64_t iy = oy * sh + ky - pt;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const std::int64_t ix = ox * sw + kx - pl;
                        if (ix < 0 || ix >= W) continue;
                        T* xp = xb + (iy * W + ix) * C;
                        const T* wp = w + (static_cast<std::int64_t>(ky) * kw + kx) * C * F;
                        for (std::int64_t c = 0; c < C; ++c) {
                            const T* wr = wp + c * F;
                            T acc = 0;
                            for (std::int64_t f = 0; f < F; ++f) acc += wr[f] * yp[f];
                            xp[c] += acc;
                        }
                    }
                }
            }
        }
    }
}

// dw[ky,kx,c,f] += sum over pairings of x and y.
template <class T>
void conv_weight_grad(const T* x, const T* y, T* dw, std::int64_t B, std::int64_t H, std::int64_t W,
                      std::int64_t C, std::int64_t OH, std::int64_t OW, std::int64_t F,
                      const ConvSpec& spec, std::int64_t pt, std::int64_t pl) {
    const int kh = spec.kernel_h, kw = spec.kernel_w, sh = spec.stride_h, sw = spec.stride_w;
    for (std::int64_t b = 0; b < B; ++b) {
        const T* xb = x + b * H * W * C;
        const T* yb = y + b * OH * OW * F;
        for (std::int64_t oy = 0; oy < OH; ++oy) {
            for (std::int64_t ox = 0; ox < OW; ++ox) {
                const T* yp = yb + (oy * OW + ox) * F;
                for (int ky = 0; ky < kh; ++ky) {
                    const std::int64_t iy = oy * sh + ky - pt;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const std::int64_t ix = ox * sw + kx - pl;
                        if (ix < 0 || ix >= W) continue;
                        const T* xp = xb + (iy * W + ix) * C;
                        T* dwp = dw + (static_cast<std::int64_t>(ky) * kw + kx) * C * F;
                        for (std::int64_t c = 0; c < C; ++c) {
                            const T a = xp[c];
                            T* dwr = dwp + c * F;
                            for (std::int64_t f = 0; f < F; ++f) dwr[f] += a * yp[f];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace detail

// 2-D convolution (definitional cross-correlation plus bias).
// input (B,H,W,C), weights (kh,kw,C,F), bias (F) -> (B,OH,OW,F).
template <class T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weights, const TensorT<T>& bias,
                  const ConvSpec& spec) {
    validate_spec(spec, "conv2d");
    if (input.rank() != 4) throw DimensionError("conv2d: input must be rank 4, got " + input.shape().str());
    if (weights.rank() != 4) throw DimensionError("conv2d: weights must be rank 4, got " + weights.shape().str());
    if (weights.dim(0) != spec.kernel_h || weights.dim(1) != spec.kernel_w || weights.dim(3) != spec.filters)
        throw DimensionError("conv2d: weights " + weights.shape().str() + " do not match spec kernel " +
                             std::to_string(spec.kernel_h) + "x" + std::to_string(spec.kernel_w) +
                             " filters " + std::to_string(spec.filters));
    if (weights.dim(2) != input.dim(3))
        throw DimensionError("conv2d: input channels " + std::to_string(input.dim(3)) +
                             " != weight input channels " + std::to_string(weights.dim(2)));
    if (bias.rank() != 1 || bias.dim(0) != spec.filters)
        throw DimensionError("conv2d: bias must have one value per filter");
    require_finite(input, "conv2d");
    require_finite(weights, "conv2d");
    require_finite(bias, "conv2d");

    const std::int64_t B = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
    const ConvGeometry g = conv_geometry(H, W, spec);
    const std::int64_t F = spec.filters;
    TensorT<T> out(Shape{B, g.out_h, g.out_w, F});
    T* y = out.data();
    for (std::int64_t i = 0; i < out.size(); ++i) y[i] = bias[i % F];
    detail::conv_gather(input.data(), y, weights.data(), B, H, W, C, g.out_h, g.out_w, F, spec,
                        g.pad_top, g.pad_left);
    return out;
}

// Resolves the spatial extents a transposed convolution must produce so that
// a forward convolution with the same spec maps them back onto the input.
inline ConvGeometry transpose_geometry(std::int64_t in_h, std::int64_t in_w, const ConvSpec& spec,
                                       std::int64_t* resolved_h, std::int64_t* resolved_w) {
    std::int64_t oh = spec.out_h, ow = spec.out_w;
    if (oh == 0 || ow == 0) {
        if (spec.stride_h == 1 && spec.stride_w == 1) {
            // Unambiguous at stride 1.
            if (spec.padding == Padding::kSame) {
                oh = in_h;
                ow = in_w;
            } else {
                oh = in_h + spec.kernel_h - 1;
                ow = in_w + spec.kernel_w - 1;
            }
        } else {
            throw DimensionError("conv_transpose2d: output extent ambiguous at stride > 1; "
                                 "spec must declare out_h/out_w");
        }
    }
    ConvGeometry g = conv_geometry(oh, ow, spec);
    if (g.out_h != in_h || g.out_w != in_w)
        throw DimensionError("conv_transpose2d: declared output " + std::to_string(oh) + "x" +
                             std::to_string(ow) + " does not map back to input " + std::to_string(in_h) +
                             "x" + std::to_string(in_w) + " under the spec");
    *resolved_h = oh;
    *resolved_w = ow;
    return g;
}

// Transposed 2-D convolution: the adjoint of conv2d with the same spec
// (scatter form), plus bias. input (B,h,w,K), weights (kh,kw,C,K) with
// C = spec.filters, bias (C) -> (B,OH,OW,C).
template <class T>
TensorT<T> conv_transpose2d(const TensorT<T>& input, const TensorT<T>& weights, const TensorT<T>& bias,
                            const ConvSpec& spec) {
    validate_spec(spec, "conv_transpose2d");
    if (input.rank() != 4)
        throw DimensionError("conv_transpose2d: input must be rank 4, got " + input.shape().str());
    if (weights.rank() != 4)
        throw DimensionError("conv_transpose2d: weights must be rank 4, got " + weights.shape().str());
    if (weights.dim(0) != spec.kernel_h || weights.dim(1) != spec.kernel_w)
        throw DimensionError("conv_transpose2d: weights " + weights.shape().str() + " do not match kernel " +
                             std::to_string(spec.kernel_h) + "x" + std::to_string(spec.kernel_w));
    if (weights.dim(2) != spec.filters)
        throw DimensionError("conv_transpose2d: weight output channels " + std::to_string(weights.dim(2)) +
                             " != spec filters " + std::to_string(spec.filters));
    if (weights.dim(3) != input.dim(3))
        throw DimensionError("conv_transpose2d: input channels " + std::to_string(input.dim(3)) +
                             " != weight channels " + std::to_string(weights.dim(3)));
    if (bias.rank() != 1 || bias.dim(0) != spec.filters)
        throw DimensionError("conv_transpose2d: bias must have one value per output channel");
    require_finite(input, "conv_transpose2d");
    require_finite(weights, "conv_transpose2d");
    require_finite(bias, "conv_transpose2d");

    const std::int64_t B = input.dim(0), h = input.dim(1), w = input.dim(2), K = input.dim(3);
    std::int64_t OH = 0, OW = 0;
    const ConvGeometry g = transpose_geometry(h, w, spec, &OH, &OW);
    const std::int64_t C = spec.filters;
    TensorT<T> out(Shape{B, OH, OW, C});
    T* x = out.data();
    detail::conv_scatter(x, input.data(), weights.data(), B, OH, OW, C, h, w, K, spec, g.pad_top,
                         g.pad_left);
    for (std::int64_t i = 0; i < out.size(); ++i) x[i] += bias[i % C];
    return out;
}

// Affine map input . weights + bias.
// input (B,K) or (K), weights (K,M), bias (M).
template <class T>
TensorT<T> dense(const TensorT<T>& input, const TensorT<T>& weights, const TensorT<T>& bias) {
    if (weights.rank() != 2) throw DimensionError("dense: weights must be rank 2, got " + weights.shape().str());
    if (input.rank() != 1 && input.rank() != 2)
        throw DimensionError("dense: input must be rank 1 or 2, got " + input.shape().str());
    const std::int64_t K = weights.dim(0), M = weights.dim(1);
    const std::int64_t B = input.rank() == 2 ? input.dim(0) : 1;
    const std::int64_t in_k = input.rank() == 2 ? input.dim(1) : input.dim(0);
    if (in_k != K)
        throw DimensionError("dense: inner extents do not conform, input " + input.shape().str() +
                             " vs weights " + weights.shape().str());
    if (bias.rank() != 1 || bias.dim(0) != M) throw DimensionError("dense: bias must be rank 1 of length M");
    require_finite(input, "dense");
    require_finite(weights, "dense");
    require_finite(bias, "dense");

    TensorT<T> out(input.rank() == 2 ? Shape{B, M} : Shape{M});
    const T* xp = input.data();
    const T* wp = weights.data();
    T* yp = out.data();
    for (std::int64_t b = 0; b < B; ++b) {
        T* yr = yp + b * M;
        for (std::int64_t m = 0; m < M; ++m) yr[m] = bias[m];
        const T* xr = xp + b * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const T a = xr[k];
            const T* wr = wp + k * M;
            for (std::int64_t m = 0; m < M; ++m) yr[m] += a * wr[m];
        }
    }
    return out;
}

// Elementwise max(0, x). The subgradient at exactly 0 is taken as 0.
template <class T>
TensorT<T> relu(const TensorT<T>& input) {
    require_finite(input, "relu");
    TensorT<T> out(input.shape());
    const T* xp = input.data();
    T* yp = out.data();
    for (std::int64_t i = 0; i < input.size(); ++i) yp[i] = xp[i] > T(0) ? xp[i] : T(0);
    return out;
}

enum class PadMode { kPad, kCrop };

namespace detail {

template <class T>
void copy_region(const TensorT<T>& src, TensorT<T>& dst, std::int64_t rows, std::int64_t cols) {
    // Shared rows x cols prefix on the spatial axes; rank 2 or 4.
    if (src.rank() == 2) {
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t c = 0; c < cols; ++c) dst.at(r, c) = src.at(r, c);
    } else {
        const std::int64_t B = src.dim(0), C = src.dim(3);
        for (std::int64_t b = 0; b < B; ++b)
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t c = 0; c < cols; ++c)
                    for (std::int64_t k = 0; k < C; ++k) dst.at(b, r, c, k) = src.at(b, r, c, k);
    }
}

}  // namespace detail

// Pad appends zero rows/columns at the high end of the spatial axes; crop
// removes from the high end. crop(pad(x)) == x. Operates on the rows/cols
// axes of rank-2 tensors and the height/width axes of rank-4 tensors.
template <class T>
TensorT<T> pad_crop(const TensorT<T>& input, std::int64_t target_h, std::int64_t target_w, PadMode mode) {
    if (input.rank() != 2 && input.rank() != 4)
        throw DimensionError("pad_crop: input must be rank 2 or 4, got " + input.shape().str());
    const int hb = input.rank() == 2 ? 0 : 1;
    const std::int64_t H = input.dim(hb), W = input.dim(hb + 1);
    if (mode == PadMode::kPad) {
        if (target_h < H || target_w < W)
            throw DimensionError("pad_crop: pad target " + std::to_string(target_h) + "x" +
                                 std::to_string(target_w) + " smaller than input " + input.shape().str());
    } else {
        if (target_h > H || target_w > W)
            throw DimensionError("pad_crop: crop target " + std::to_string(target_h) + "x" +
                                 std::to_string(target_w) + " larger than input " + input.shape().str());
    }
    Shape out_shape = input.rank() == 2 ? Shape{target_h, target_w}
                                        : Shape{input.dim(0), target_h, target_w, input.dim(3)};
    TensorT<T> out(out_shape);
    detail::copy_region(input, out, std::min(H, target_h), std::min(W, target_w));
    return out;
}

}  // namespace cycleguard
