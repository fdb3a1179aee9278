#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cycleguard/adam.hpp"
#include "cycleguard/cycle.hpp"
#include "cycleguard/evaluation.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

// Comparison detectors working on windows reduced to per-feature means:
// angle-based outlier detection, k-nearest-neighbor distance, and a small
// dense autoencoder.

struct FeatureVector {
    std::vector<double> values;
    std::string sample_id;
    Label label = Label::kHealthy;
};

enum class Orientation { kHigherIsOutlier, kLowerIsOutlier };

enum class BaselineMethod { kAbod, kKnn, kDenseAe };

const char* baseline_method_name(BaselineMethod m);
BaselineMethod parse_baseline_method(const std::string& s);
Orientation baseline_orientation(BaselineMethod m);

struct OutlierScore {
    std::string method;
    double value = 0;
    Orientation orientation = Orientation::kHigherIsOutlier;
    std::string sample_id;
};

// Per-feature mean over the window's time steps.
FeatureVector reduce_window(const SampleWindow& window, Label label);

// Tiled windows of every cycle in order, reduced. The stacking order is
// cycle order, then window start order.
std::vector<FeatureVector> reduce_cycles(const std::vector<const DriveCycle*>& cycles,
                                         std::int64_t window = 128);

double minkowski_distance(const std::vector<double>& a, const std::vector<double>& b, double p);

// Distance to the k-th nearest training vector under Minkowski-p. Pass the
// query's own index in exclude_index when it is a member of the training
// set, -1 otherwise.
double knn_score(const std::vector<FeatureVector>& train, const FeatureVector& query, int k, double p,
                 std::int64_t exclude_index = -1);

// Population variance over training pairs (a, b) of the distance-weighted
// cosine <a-q, b-q> / (|a-q|^2 * |b-q|^2). Coincident points are excluded;
// if fewer than two distinct points remain the input is degenerate. Small
// values mean outlier. neighborhood > 0 restricts the pair pool to that many
// nearest training points.
double abod_score(const std::vector<FeatureVector>& train, const FeatureVector& query,
                  int neighborhood = 0);

struct DenseAeConfig {
    std::vector<std::int64_t> hidden = {32, 8, 32};
    int epochs = 200;
    std::int64_t batch = 64;
    std::uint64_t seed = 0;
    AdamConfig adam;
};

struct DenseAe {
    std::vector<std::int64_t> widths;  // input, hidden..., input
    std::vector<Tensor> weights;
    std::vector<Tensor> biases;
    bool trained = false;
};

// ReLU hidden layers, linear output, plain mean squared error, Adam with the
// shared defaults. Seed-deterministic.
DenseAe train_dense_ae(const std::vector<FeatureVector>& train, const DenseAeConfig& config);

std::vector<double> dense_ae_reconstruct(const DenseAe& model, const std::vector<double>& input);

// Euclidean distance between the query and its reconstruction.
double dense_ae_score(const DenseAe& model, const FeatureVector& query);

struct BaselineThreshold {
    double threshold = 0;
    Orientation orientation = Orientation::kHigherIsOutlier;
    double margin = 1.05;
};

// Margin-calibrated cutoff on healthy validation scores, aware of which
// direction means outlier: above max * margin for higher-is-outlier methods,
// below min / margin for lower-is-outlier ones. Ties stay healthy.
BaselineThreshold calibrate_outlier_threshold(const std::vector<double>& validation_scores,
                                              Orientation orientation, double margin);

bool is_outlier(const BaselineThreshold& threshold, double score);

struct BaselineOptions {
    std::int64_t window = 128;
    int k = 5;
    double p = 2.0;
    int abod_neighborhood = 0;  // 0 = all pairs
    double margin = 1.05;
    DenseAeConfig dense;
    int threads = 1;
};

struct BaselineRun {
    std::vector<ScoreRecord> records;  // validation + test, method column set
    std::vector<OutlierScore> scores;
    BaselineThreshold threshold;
    MetricsReport metrics;
};

// Fits the method on the training cycles' vectors, scores validation + test
// vectors, calibrates the orientation-aware threshold on validation, and
// reports metrics with faulted as the positive class.
BaselineRun run_baseline(BaselineMethod method, const std::vector<const DriveCycle*>& train,
                         const std::vector<const DriveCycle*>& validation,
                         const std::vector<const DriveCycle*>& test, const BaselineOptions& options);

}  // namespace cycleguard
