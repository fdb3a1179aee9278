#pragma once

// Reference implementations the unit and acceptance tests check the library
// against. Each is deliberately structured differently from the production
// code: explicit padded buffers instead of implicit bounds, full sorts
// instead of partial selection, two-pass statistics instead of single-pass
// identities. Slow and obvious on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "cycleguard/ops.hpp"
#include "cycleguard/tensor.hpp"

namespace oracles {

using cycleguard::ConvSpec;
using cycleguard::Padding;
using cycleguard::Shape;
using cycleguard::Tensor;

// Materializes the zero-padded input, then runs the textbook six-loop
// correlation.
inline Tensor naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& bias, const ConvSpec& spec) {
    const std::int64_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    const std::int64_t kh = spec.kernel_h, kw = spec.kernel_w;
    const std::int64_t sh = spec.stride_h, sw = spec.stride_w;
    std::int64_t oh, ow, pt, pl, th, tw;
    if (spec.padding == Padding::kSame) {
        oh = (H + sh - 1) / sh;
        ow = (W + sw - 1) / sw;
        th = std::max<std::int64_t>((oh - 1) * sh + kh - H, 0);
        tw = std::max<std::int64_t>((ow - 1) * sw + kw - W, 0);
        pt = th / 2;
        pl = tw / 2;
    } else {
        oh = (H - kh) / sh + 1;
        ow = (W - kw) / sw + 1;
        th = tw = pt = pl = 0;
    }
    Tensor padded(Shape{B, H + th, W + tw, C});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t i = 0; i < H; ++i)
            for (std::int64_t j = 0; j < W; ++j)
                for (std::int64_t c = 0; c < C; ++c) padded.at(b, i + pt, j + pl, c) = x.at(b, i, j, c);
    const std::int64_t F = spec.filters;
    Tensor out(Shape{B, oh, ow, F});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t i = 0; i < oh; ++i)
            for (std::int64_t j = 0; j < ow; ++j)
                for (std::int64_t f = 0; f < F; ++f) {
                    double acc = bias[f];
                    for (std::int64_t u = 0; u < kh; ++u)
                        for (std::int64_t v = 0; v < kw; ++v)
                            for (std::int64_t c = 0; c < C; ++c)
                                acc += padded.at(b, i * sh + u, j * sw + v, c) * w.at(u, v, c, f);
                    out.at(b, i, j, f) = acc;
                }
    return out;
}

// Transposed convolution as the literal adjoint: every output position
// collects the terms a forward pass at that position would have produced.
// Weights (kh,kw,F,K), y (B,h,w,K), declared out extents (OH,OW).
inline Tensor naive_conv_transpose2d(const Tensor& y, const Tensor& w, const Tensor& bias,
                                     const ConvSpec& spec, std::int64_t OH, std::int64_t OW) {
    const std::int64_t B = y.dim(0), h = y.dim(1), wd = y.dim(2), K = y.dim(3);
    const std::int64_t kh = spec.kernel_h, kw = spec.kernel_w;
    const std::int64_t sh = spec.stride_h, sw = spec.stride_w;
    std::int64_t pt = 0, pl = 0;
    if (spec.padding == Padding::kSame) {
        pt = std::max<std::int64_t>((h - 1) * sh + kh - OH, 0) / 2;
        pl = std::max<std::int64_t>((wd - 1) * sw + kw - OW, 0) / 2;
    }
    const std::int64_t F = spec.filters;
    Tensor out(Shape{B, OH, OW, F});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t p = 0; p < OH; ++p)
            for (std::int64_t q = 0; q < OW; ++q)
                for (std::int64_t f = 0; f < F; ++f) {
                    double acc = bias[f];
                    for (std::int64_t i = 0; i < h; ++i)
                        for (std::int64_t j = 0; j < wd; ++j) {
                            const std::int64_t u = p - (i * sh - pt);
                            const std::int64_t v = q - (j * sw - pl);
                            if (u < 0 || u >= kh || v < 0 || v >= kw) continue;
                            for (std::int64_t k = 0; k < K; ++k)
                                acc += y.at(b, i, j, k) * w.at(u, v, f, k);
                        }
                    out.at(b, p, q, f) = acc;
                }
    return out;
}

inline Tensor naive_dense(const Tensor& x, const Tensor& w, const Tensor& bias) {
    const std::int64_t B = x.rank() == 2 ? x.dim(0) : 1;
    const std::int64_t K = w.dim(0), M = w.dim(1);
    Tensor out(x.rank() == 2 ? Shape{B, M} : Shape{M});
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t m = 0; m < M; ++m) {
            double acc = bias[m];
            for (std::int64_t k = 0; k < K; ++k) acc += x[b * K + k] * w.at(k, m);
            out[b * M + m] = acc;
        }
    return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
    double acc = 0;
    for (std::int64_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Interpolated quantile on a full sorted copy.
inline double naive_quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

inline double naive_minkowski(const std::vector<double>& a, const std::vector<double>& b, double p) {
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), p);
    return std::pow(acc, 1.0 / p);
}

// k-th nearest by sorting every distance.
inline double brute_knn(const std::vector<std::vector<double>>& train, const std::vector<double>& query,
                        int k, double p, std::int64_t exclude = -1) {
    std::vector<double> d;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (static_cast<std::int64_t>(i) == exclude) continue;
        d.push_back(naive_minkowski(train[i], query, p));
    }
    std::sort(d.begin(), d.end());
    return d[static_cast<std::size_t>(k - 1)];
}

// Angle-variance outlier factor by direct pair enumeration; two-pass
// population variance. Returns false when the neighborhood is degenerate.
inline bool brute_abod(const std::vector<std::vector<double>>& train, const std::vector<double>& query,
                       int neighborhood, double* out) {
    std::vector<std::vector<double>> diffs;
    for (const auto& t : train) {
        std::vector<double> d(t.size());
        double norm2 = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            d[i] = t[i] - query[i];
            norm2 += d[i] * d[i];
        }
        if (norm2 > 0) diffs.push_back(std::move(d));
    }
    if (neighborhood > 0 && static_cast<std::size_t>(neighborhood) < diffs.size()) {
        std::stable_sort(diffs.begin(), diffs.end(), [](const auto& a, const auto& b) {
            double na = 0, nb = 0;
            for (double v : a) na += v * v;
            for (double v : b) nb += v * v;
            return na < nb;
        });
        diffs.resize(static_cast<std::size_t>(neighborhood));
    }
    if (diffs.size() < 2) return false;
    std::vector<double> angles;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        for (std::size_t j = i + 1; j < diffs.size(); ++j) {
            double dp = 0, ni = 0, nj = 0;
            for (std::size_t m = 0; m < diffs[i].size(); ++m) {
                dp += diffs[i][m] * diffs[j][m];
                ni += diffs[i][m] * diffs[i][m];
                nj += diffs[j][m] * diffs[j][m];
            }
            angles.push_back(dp / (ni * nj));
        }
    const double mean = std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(angles.size());
    double var = 0;
    for (double a : angles) var += (a - mean) * (a - mean);
    *out = var / static_cast<double>(angles.size());
    return true;
}

// Central-difference derivative of f with respect to coordinate i of x.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x, std::size_t i, double h = 1e-5) {
    x[i] += h;
    const double fp = f(x);
    x[i] -= 2 * h;
    const double fm = f(x);
    return (fp - fm) / (2 * h);
}

// Composite cost recomputed with materialized deviations and a two-pass
// standard deviation.
struct NaiveLoss {
    double mse, mae, std_abs, total;
};

inline NaiveLoss naive_composite_loss(const Tensor& x, const Tensor& rec, std::int64_t valid_width,
                                      bool per_row) {
    std::int64_t rows, stride, valid;
    if (x.rank() == 4) {
        rows = x.dim(0) * x.dim(1);
        stride = x.dim(2) * x.dim(3);
        valid = (valid_width > 0 ? valid_width : x.dim(2)) * x.dim(3);
    } else {
        rows = x.rank() == 2 ? x.dim(0) : 1;
        stride = x.rank() == 2 ? x.dim(1) : x.size();
        valid = valid_width > 0 ? valid_width : stride;
    }
    std::vector<std::vector<double>> dev(static_cast<std::size_t>(rows));
    std::vector<double> all;
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t i = 0; i < valid; ++i) {
            const double a = std::abs(x[r * stride + i] - rec[r * stride + i]);
            dev[static_cast<std::size_t>(r)].push_back(a);
            all.push_back(a);
        }
    const auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    const auto stdev = [&mean](const std::vector<double>& v) {
        const double m = mean(v);
        double acc = 0;
        for (double a : v) acc += (a - m) * (a - m);
        return std::sqrt(acc / static_cast<double>(v.size()));
    };
    NaiveLoss out{};
    double sq = 0;
    for (double a : all) sq += a * a;
    out.mse = sq / static_cast<double>(all.size());
    out.mae = mean(all);
    if (per_row) {
        out.std_abs = 0;
        for (const auto& row : dev) out.std_abs += stdev(row);
    } else {
        out.std_abs = stdev(all);
    }
    out.total = out.mse + out.mae + out.std_abs;
    return out;
}

}  // namespace oracles
