#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cycleguard/cycle.hpp"
#include "cycleguard/loss.hpp"
#include "cycleguard/model.hpp"

namespace cycleguard {

enum class Granularity { kBatch, kCycle, kSample };

const char* granularity_name(Granularity g);
Granularity parse_granularity(const std::string& s);

// One scored unit: a whole assembled batch, a whole cycle, or a single
// window. J is loss.total. method is empty for the autoencoder and names a
// baseline detector otherwise (baseline rows carry the score in J with zero
// component fields).
struct ScoreRecord {
    Granularity granularity = Granularity::kSample;
    std::string method;
    std::vector<std::string> cycle_ids;
    std::int64_t window_start = -1;  // samples only
    std::optional<Label> label;
    LossBreakdown loss;
};

struct ScoreOptions {
    std::int64_t window = 128;
    std::int64_t batch_size = 256;  // batch granularity group size
    SigmaMode sigma_mode = SigmaMode::kMatrix;
    int threads = 1;
};

// Scores normalized cycles at one granularity. Sample: one record per
// contiguous stride-`window` window. Cycle: the mean of the cycle's sample
// records. Batch: label-pure groups of up to batch_size windows, J computed
// over the whole group tensor at once; a smaller final group per label is
// kept. Deterministic; thread count never changes the output.
std::vector<ScoreRecord> score(const Autoencoder& model, const std::vector<const DriveCycle*>& cycles,
                               Granularity granularity, const ScoreOptions& options = {});

struct FiveNumberSummary {
    double min = 0, q25 = 0, median = 0, q75 = 0, max = 0;
};

// Quantiles by linear interpolation between closest ranks.
FiveNumberSummary summarize(const std::vector<double>& values);

enum class ThresholdRule { kMaxMargin, kQuantile };

struct ThresholdModel {
    double threshold = 0;
    ThresholdRule rule = ThresholdRule::kMaxMargin;
    double param = 1.05;
    FiveNumberSummary validation;
};

// Calibrates on healthy validation scores only (a faulted record in the
// input is a contract violation). Max-margin: threshold = max * param with
// param >= 1. Quantile: interpolated quantile at param in [0, 1].
ThresholdModel calibrate_threshold(const std::vector<ScoreRecord>& validation_scores, ThresholdRule rule,
                                   double param);

struct MetricsReport {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0;
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::int64_t healthy = 0, faulted = 0;
};

// J > threshold predicts faulted (ties stay healthy); faulted is the
// positive class. Every record must be labeled.
MetricsReport classify_and_report(const std::vector<ScoreRecord>& scores, double threshold);

std::string format_metrics(const MetricsReport& report, const std::string& method,
                           Granularity granularity, const ThresholdModel* threshold);

// Columns: granularity,cycle_id,window_start,label,mse,mae,std_abs,J (batch
// rows join their cycle ids with ';'); a leading method column when asked.
void write_scores_csv(const std::string& path, const std::vector<ScoreRecord>& records,
                      bool method_column = false);

}  // namespace cycleguard
