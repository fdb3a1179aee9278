#pragma once

#include <cmath>
#include <cstdint>

#include "cycleguard/tensor.hpp"

namespace cycleguard {

// How the standard-deviation term of the composite cost is aggregated.
// kMatrix: one population standard deviation over every included element of
// the absolute-difference tensor (the default). kPerRow: a per-time-row
// standard deviation over the included feature columns, summed over rows —
// kept behind this switch for comparison runs.
enum class SigmaMode { kMatrix, kPerRow };

struct LossOptions {
    // Number of leading feature columns included in the cost; 0 means all.
    // Padding columns beyond the real feature count are excluded so they
    // cannot influence the score.
    std::int64_t valid_width = 0;
    SigmaMode sigma_mode = SigmaMode::kMatrix;
};

// Composite reconstruction cost: mean square error + mean absolute error +
// standard deviation of the absolute-difference matrix. total is the sum of
// the three parts and is 0 exactly when the inputs are elementwise equal.
struct LossBreakdown {
    double mse = 0;
    double mae = 0;
    double std_abs = 0;
    double total = 0;
};

namespace detail {

struct LossDims {
    std::int64_t rows = 0;       // number of (batch, time) rows
    std::int64_t row_stride = 0; // elements per row in memory
    std::int64_t valid = 0;      // included elements per row
    std::int64_t n = 0;          // total included elements
};

template <class T>
LossDims loss_dims(const TensorT<T>& x, const LossOptions& opt) {
    LossDims d;
    if (x.rank() == 2) {
        d.rows = x.dim(0);
        d.row_stride = x.dim(1);
        d.valid = opt.valid_width > 0 ? opt.valid_width : x.dim(1);
    } else if (x.rank() == 4) {
        // (B,H,W,C): a row is one (b,h) slice; the feature axis is W.
        d.rows = x.dim(0) * x.dim(1);
        d.row_stride = x.dim(2) * x.dim(3);
        d.valid = (opt.valid_width > 0 ? opt.valid_width : x.dim(2)) * x.dim(3);
    } else {
        d.rows = 1;
        d.row_stride = x.size();
        d.valid = x.size();
    }
    if (d.valid > d.row_stride)
        throw DimensionError("loss: valid width exceeds feature extent");
    if (d.valid <= 0 || d.rows <= 0) throw DimensionError("loss: empty region");
    d.n = d.rows * d.valid;
    return d;
}

}  // namespace detail

template <class T>
LossBreakdown composite_loss(const TensorT<T>& x, const TensorT<T>& reconstruction,
                             const LossOptions& opt = {}) {
    if (!x.same_shape(reconstruction))
        throw DimensionError("loss: shape mismatch " + x.shape().str() + " vs " +
                             reconstruction.shape().str());
    require_finite(x, "loss");
    require_finite(reconstruction, "loss");
    const detail::LossDims d = detail::loss_dims(x, opt);

    const T* xp = x.data();
    const T* rp = reconstruction.data();
    double sum_a = 0, sum_a2 = 0, sigma_rows = 0;
    for (std::int64_t r = 0; r < d.rows; ++r) {
        const T* xr = xp + r * d.row_stride;
        const T* rr = rp + r * d.row_stride;
        double row_a = 0, row_a2 = 0;
        for (std::int64_t i = 0; i < d.valid; ++i) {
            const double a = std::abs(static_cast<double>(xr[i]) - static_cast<double>(rr[i]));
            row_a += a;
            row_a2 += a * a;
        }
        sum_a += row_a;
        sum_a2 += row_a2;
        if (opt.sigma_mode == SigmaMode::kPerRow) {
            const double m = row_a / static_cast<double>(d.valid);
            const double var = row_a2 / static_cast<double>(d.valid) - m * m;
            sigma_rows += std::sqrt(var > 0 ? var : 0);
        }
    }
    LossBreakdown out;
    const double n = static_cast<double>(d.n);
    out.mse = sum_a2 / n;
    out.mae = sum_a / n;
    if (opt.sigma_mode == SigmaMode::kMatrix) {
        const double var = out.mse - out.mae * out.mae;
        out.std_abs = std::sqrt(var > 0 ? var : 0);
    } else {
        out.std_abs = sigma_rows;
    }
    out.total = out.mse + out.mae + out.std_abs;
    if (!std::isfinite(out.total)) throw NumericError("loss: non-finite cost");
    return out;
}

namespace detail {

inline double sign_of(double e) { return e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0); }

// d(total)/d(reconstruction); the gradient with respect to x is its negation
// elementwise (the cost depends on the two arguments only through x - r).
// At sigma == 0 the subgradient is taken as 0.
template <class T>
void composite_loss_grad(const TensorT<T>& x, const TensorT<T>& reconstruction, const LossOptions& opt,
                         double upstream, TensorT<T>* grad_rec, TensorT<T>* grad_x) {
    const LossDims d = loss_dims(x, opt);
    const LossBreakdown lb = composite_loss(x, reconstruction, opt);
    const double n = static_cast<double>(d.n);
    const T* xp = x.data();
    const T* rp = reconstruction.data();

    for (std::int64_t r = 0; r < d.rows; ++r) {
        const T* xr = xp + r * d.row_stride;
        const T* rr = rp + r * d.row_stride;
        double row_sigma = 0, row_mean = 0;
        if (opt.sigma_mode == SigmaMode::kPerRow) {
            double row_a = 0, row_a2 = 0;
            for (std::int64_t i = 0; i < d.valid; ++i) {
                const double a = std::abs(static_cast<double>(xr[i]) - static_cast<double>(rr[i]));
                row_a += a;
                row_a2 += a * a;
            }
            row_mean = row_a / static_cast<double>(d.valid);
            const double var = row_a2 / static_cast<double>(d.valid) - row_mean * row_mean;
            row_sigma = std::sqrt(var > 0 ? var : 0);
        }
        for (std::int64_t i = 0; i < d.valid; ++i) {
            const double e = static_cast<double>(xr[i]) - static_cast<double>(rr[i]);
            const double a = std::abs(e);
            double da = 2.0 * a / n + 1.0 / n;  // mse + mae parts
            if (opt.sigma_mode == SigmaMode::kMatrix) {
                if (lb.std_abs > 0) da += (a - lb.mae) / (n * lb.std_abs);
            } else {
                if (row_sigma > 0)
                    da += (a - row_mean) / (static_cast<double>(d.valid) * row_sigma);
            }
            const double g = upstream * da * sign_of(e);
            const std::int64_t idx = r * d.row_stride + i;
            if (grad_rec) (*grad_rec)[idx] += static_cast<T>(-g);
            if (grad_x) (*grad_x)[idx] += static_cast<T>(g);
        }
    }
}

}  // namespace detail

}  // namespace cycleguard
