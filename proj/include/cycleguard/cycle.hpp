#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cycleguard/error.hpp"
#include "cycleguard/ops.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

enum class Label { kHealthy, kFaulted };

inline const char* label_name(Label l) { return l == Label::kHealthy ? "healthy" : "faulted"; }

inline Label parse_label(const std::string& s) {
    if (s == "healthy") return Label::kHealthy;
    if (s == "faulted") return Label::kFaulted;
    throw DataError("unknown label '" + s + "' (expected healthy or faulted)");
}

// One recorded drive cycle: T time steps at 0.1 s by F features. Maxima are
// the externally provided per-feature bounds used for normalization, not the
// observed column maxima.
struct DriveCycle {
    std::string id;
    Label label = Label::kHealthy;
    Tensor matrix;  // (T, F)
    std::vector<std::string> feature_names;
    std::vector<double> feature_maxima;
    bool normalized = false;

    std::int64_t steps() const { return matrix.rank() == 2 ? matrix.dim(0) : 0; }
    std::int64_t features() const { return matrix.rank() == 2 ? matrix.dim(1) : 0; }
};

// Divides each column by its provided maximum. Applying twice would silently
// shrink the data, so a second call on the result is a state error. Values
// landing above 1.05 are reported as warnings, one per offending feature.
inline DriveCycle normalize(const DriveCycle& cycle, std::vector<std::string>* warnings = nullptr) {
    if (cycle.normalized) throw StateError("normalize: cycle '" + cycle.id + "' is already normalized");
    const std::int64_t F = cycle.features();
    if (static_cast<std::int64_t>(cycle.feature_maxima.size()) != F)
        throw DataError("normalize: cycle '" + cycle.id + "' has " + std::to_string(F) +
                        " features but " + std::to_string(cycle.feature_maxima.size()) + " maxima");
    for (std::int64_t f = 0; f < F; ++f)
        if (!(cycle.feature_maxima[static_cast<std::size_t>(f)] > 0.0))
            throw ConfigError("normalize: maximum for feature '" +
                              cycle.feature_names[static_cast<std::size_t>(f)] + "' must be positive");

    DriveCycle out = cycle;
    const std::int64_t T = cycle.steps();
    for (std::int64_t f = 0; f < F; ++f) {
        const double m = cycle.feature_maxima[static_cast<std::size_t>(f)];
        std::int64_t over = 0;
        for (std::int64_t t = 0; t < T; ++t) {
            double& v = out.matrix.at(t, f);
            v /= m;
            if (v > 1.05) ++over;
        }
        if (over > 0 && warnings)
            warnings->push_back("cycle '" + cycle.id + "' feature '" +
                                cycle.feature_names[static_cast<std::size_t>(f)] + "': " +
                                std::to_string(over) + " values exceed 1.05 after normalization");
    }
    out.normalized = true;
    return out;
}

// A window cropped from one cycle. Rows are verbatim slices of the source
// matrix; channel padding to the model width happens at tensor assembly.
struct SampleWindow {
    std::string cycle_id;
    std::int64_t start_index = 0;
    Tensor matrix;  // (W, F)
};

inline SampleWindow crop_window(const DriveCycle& cycle, std::int64_t start, std::int64_t window) {
    if (start < 0 || start + window > cycle.steps())
        throw DataError("crop_window: [" + std::to_string(start) + ", " + std::to_string(start + window) +
                        ") outside cycle '" + cycle.id + "' of length " + std::to_string(cycle.steps()));
    const std::int64_t F = cycle.features();
    SampleWindow w;
    w.cycle_id = cycle.id;
    w.start_index = start;
    w.matrix = Tensor(Shape{window, F});
    for (std::int64_t t = 0; t < window; ++t)
        for (std::int64_t f = 0; f < F; ++f) w.matrix.at(t, f) = cycle.matrix.at(start + t, f);
    return w;
}

// Draws `count` windows with start indices uniform on [0, T-window]. Starts
// may repeat; a fresh draw happens every call, so batches resample.
inline std::vector<SampleWindow> sample_windows(const DriveCycle& cycle, std::int64_t window,
                                                std::int64_t count, std::mt19937_64& rng) {
    if (!cycle.normalized)
        throw StateError("sample_windows: cycle '" + cycle.id + "' must be normalized first");
    if (cycle.steps() < window)
        throw DataError("sample_windows: cycle '" + cycle.id + "' has " + std::to_string(cycle.steps()) +
                        " steps, shorter than window " + std::to_string(window));
    std::uniform_int_distribution<std::int64_t> dist(0, cycle.steps() - window);
    std::vector<SampleWindow> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(crop_window(cycle, dist(rng), window));
    return out;
}

// Contiguous non-overlapping tiling from step 0; the tail shorter than one
// window is dropped. Used for whole-cycle scoring.
inline std::vector<SampleWindow> tile_windows(const DriveCycle& cycle, std::int64_t window) {
    if (!cycle.normalized)
        throw StateError("tile_windows: cycle '" + cycle.id + "' must be normalized first");
    if (cycle.steps() < window)
        throw DataError("tile_windows: cycle '" + cycle.id + "' has " + std::to_string(cycle.steps()) +
                        " steps, shorter than window " + std::to_string(window));
    std::vector<SampleWindow> out;
    for (std::int64_t s = 0; s + window <= cycle.steps(); s += window) out.push_back(crop_window(cycle, s, window));
    return out;
}

// A set of windows viewed as one model input tensor.
struct Batch {
    std::vector<SampleWindow> samples;

    // (B, W, target_features, 1); columns past F are exactly zero.
    Tensor tensor(std::int64_t target_features) const {
        if (samples.empty()) throw DataError("batch tensor: no samples");
        const std::int64_t B = static_cast<std::int64_t>(samples.size());
        const std::int64_t W = samples.front().matrix.dim(0);
        const std::int64_t F = samples.front().matrix.dim(1);
        if (F > target_features)
            throw DimensionError("batch tensor: " + std::to_string(F) + " features exceed model width " +
                                 std::to_string(target_features));
        Tensor out(Shape{B, W, target_features, 1});
        for (std::int64_t b = 0; b < B; ++b) {
            const SampleWindow& s = samples[static_cast<std::size_t>(b)];
            if (s.matrix.dim(0) != W || s.matrix.dim(1) != F)
                throw DimensionError("batch tensor: mixed window shapes");
            for (std::int64_t t = 0; t < W; ++t)
                for (std::int64_t f = 0; f < F; ++f) out.at(b, t, f, 0) = s.matrix.at(t, f);
        }
        return out;
    }
};

// One training batch: `per_cycle` fresh windows from each listed cycle, in
// cycle order. The default plan draws 4 cycles x 64 windows = 256.
inline Batch assemble_batch(const std::vector<const DriveCycle*>& cycles, std::int64_t window,
                            std::int64_t per_cycle, std::mt19937_64& rng) {
    Batch batch;
    batch.samples.reserve(cycles.size() * static_cast<std::size_t>(per_cycle));
    for (const DriveCycle* c : cycles) {
        std::vector<SampleWindow> ws = sample_windows(*c, window, per_cycle, rng);
        for (SampleWindow& w : ws) batch.samples.push_back(std::move(w));
    }
    return batch;
}

// Concatenates `replicas` copies of the columns, each copy's column order
// shuffled independently. The output column multiset is the input's times
// `replicas`.
inline Tensor augment_features(const Tensor& data, int replicas, std::mt19937_64& rng) {
    if (data.rank() != 2) throw DimensionError("augment_features: input must be rank 2, got " + data.shape().str());
    if (replicas < 1) throw ConfigError("augment_features: replicas must be >= 1");
    const std::int64_t T = data.dim(0), F = data.dim(1);
    Tensor out(Shape{T, F * replicas});
    std::vector<std::int64_t> order(static_cast<std::size_t>(F));
    for (int r = 0; r < replicas; ++r) {
        for (std::int64_t f = 0; f < F; ++f) order[static_cast<std::size_t>(f)] = f;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::int64_t t = 0; t < T; ++t)
            for (std::int64_t f = 0; f < F; ++f)
                out.at(t, static_cast<std::int64_t>(r) * F + f) = data.at(t, order[static_cast<std::size_t>(f)]);
    }
    return out;
}

// Splits a long series into consecutive `chunk` step pieces, zero-padding
// each piece's time axis up to `pad_to`. The tail shorter than `chunk` is
// dropped.
inline std::vector<Tensor> chunk_series(const Tensor& series, std::int64_t chunk, std::int64_t pad_to) {
    if (series.rank() != 2) throw DimensionError("chunk_series: input must be rank 2, got " + series.shape().str());
    if (chunk < 1 || pad_to < chunk) throw ConfigError("chunk_series: need 1 <= chunk <= pad_to");
    const std::int64_t T = series.dim(0), F = series.dim(1);
    std::vector<Tensor> out;
    for (std::int64_t s = 0; s + chunk <= T; s += chunk) {
        Tensor piece(Shape{pad_to, F});
        for (std::int64_t t = 0; t < chunk; ++t)
            for (std::int64_t f = 0; f < F; ++f) piece.at(t, f) = series.at(s + t, f);
        out.push_back(std::move(piece));
    }
    return out;
}

}  // namespace cycleguard
