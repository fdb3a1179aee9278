#include "cycleguard/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "cycleguard/error.hpp"
#include "cycleguard/rng.hpp"
#include "cycleguard/tape.hpp"

namespace cycleguard {

const char* baseline_method_name(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::kAbod: return "abod";
        case BaselineMethod::kKnn: return "knn";
        case BaselineMethod::kDenseAe: return "dense-ae";
    }
    return "?";
}

BaselineMethod parse_baseline_method(const std::string& s) {
    if (s == "abod") return BaselineMethod::kAbod;
    if (s == "knn") return BaselineMethod::kKnn;
    if (s == "dense-ae") return BaselineMethod::kDenseAe;
    throw ConfigError("unknown method '" + s + "' (expected abod, knn or dense-ae)");
}

Orientation baseline_orientation(BaselineMethod m) {
    return m == BaselineMethod::kAbod ? Orientation::kLowerIsOutlier : Orientation::kHigherIsOutlier;
}

FeatureVector reduce_window(const SampleWindow& window, Label label) {
    const std::int64_t T = window.matrix.dim(0), F = window.matrix.dim(1);
    FeatureVector v;
    v.values.assign(static_cast<std::size_t>(F), 0.0);
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t f = 0; f < F; ++f) v.values[static_cast<std::size_t>(f)] += window.matrix.at(t, f);
    for (double& x : v.values) x /= static_cast<double>(T);
    v.sample_id = window.cycle_id + ":" + std::to_string(window.start_index);
    v.label = label;
    return v;
}

std::vector<FeatureVector> reduce_cycles(const std::vector<const DriveCycle*>& cycles, std::int64_t window) {
    std::vector<FeatureVector> out;
    for (const DriveCycle* c : cycles)
        for (const SampleWindow& w : tile_windows(*c, window)) out.push_back(reduce_window(w, c->label));
    return out;
}

double minkowski_distance(const std::vector<double>& a, const std::vector<double>& b, double p) {
    if (a.size() != b.size())
        throw DimensionError("minkowski: vectors of length " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    if (p < 1.0) throw ConfigError("minkowski: p must be >= 1");
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::fabs(a[i] - b[i]), p);
    return std::pow(acc, 1.0 / p);
}

double knn_score(const std::vector<FeatureVector>& train, const FeatureVector& query, int k, double p,
                 std::int64_t exclude_index) {
    if (k < 1) throw ContractError("knn: k must be >= 1");
    std::vector<double> dist;
    dist.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (static_cast<std::int64_t>(i) == exclude_index) continue;
        dist.push_back(minkowski_distance(train[i].values, query.values, p));
    }
    if (static_cast<std::size_t>(k) > dist.size())
        throw ContractError("knn: k=" + std::to_string(k) + " exceeds the " + std::to_string(dist.size()) +
                            " available training vectors");
    std::nth_element(dist.begin(), dist.begin() + (k - 1), dist.end());
    return dist[static_cast<std::size_t>(k - 1)];
}

double abod_score(const std::vector<FeatureVector>& train, const FeatureVector& query, int neighborhood) {
    const std::size_t F = query.values.size();
    struct Diff {
        std::vector<double> d;
        double norm_sq;
    };
    std::vector<Diff> diffs;
    for (const FeatureVector& t : train) {
        if (t.values.size() != F) throw DimensionError("abod: feature length mismatch");
        Diff diff;
        diff.d.resize(F);
        diff.norm_sq = 0;
        for (std::size_t i = 0; i < F; ++i) {
            diff.d[i] = t.values[i] - query.values[i];
            diff.norm_sq += diff.d[i] * diff.d[i];
        }
        if (diff.norm_sq > 0) diffs.push_back(std::move(diff));
    }
    if (diffs.size() < 2)
        throw DataError("abod: degenerate input, fewer than two training points distinct from the query");
    if (neighborhood > 0 && static_cast<std::size_t>(neighborhood) < diffs.size()) {
        std::stable_sort(diffs.begin(), diffs.end(),
                         [](const Diff& a, const Diff& b) { return a.norm_sq < b.norm_sq; });
        diffs.resize(static_cast<std::size_t>(neighborhood));
        if (diffs.size() < 2) throw DataError("abod: neighborhood leaves fewer than two points");
    }

    // Two-pass population variance over the pair statistic.
    double sum = 0, sum_sq = 0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        for (std::size_t j = i + 1; j < diffs.size(); ++j) {
            double dot = 0;
            for (std::size_t f = 0; f < F; ++f) dot += diffs[i].d[f] * diffs[j].d[f];
            const double w = dot / (diffs[i].norm_sq * diffs[j].norm_sq);
            sum += w;
            sum_sq += w * w;
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    return std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
}

namespace {

Tensor vectors_to_matrix(const std::vector<FeatureVector>& vs) {
    const std::int64_t N = static_cast<std::int64_t>(vs.size());
    const std::int64_t F = static_cast<std::int64_t>(vs.front().values.size());
    Tensor m(Shape{N, F});
    for (std::int64_t i = 0; i < N; ++i) {
        if (static_cast<std::int64_t>(vs[static_cast<std::size_t>(i)].values.size()) != F)
            throw DimensionError("dense-ae: feature length mismatch in training set");
        for (std::int64_t f = 0; f < F; ++f)
            m.at(i, f) = vs[static_cast<std::size_t>(i)].values[static_cast<std::size_t>(f)];
    }
    return m;
}

}  // namespace

DenseAe train_dense_ae(const std::vector<FeatureVector>& train, const DenseAeConfig& config) {
    if (train.empty()) throw DataError("dense-ae: no training vectors");
    if (config.epochs < 1 || config.batch < 1) throw ConfigError("dense-ae: epochs and batch must be >= 1");
    const std::int64_t F = static_cast<std::int64_t>(train.front().values.size());

    DenseAe model;
    model.widths.push_back(F);
    for (const std::int64_t h : config.hidden) {
        if (h < 1) throw ConfigError("dense-ae: hidden widths must be >= 1");
        model.widths.push_back(h);
    }
    model.widths.push_back(F);

    std::mt19937_64 init_rng = make_rng(derive_seed(config.seed, 0xdae));
    for (std::size_t l = 0; l + 1 < model.widths.size(); ++l) {
        const std::int64_t in = model.widths[l], out = model.widths[l + 1];
        Tensor w(Shape{in, out});
        const double limit = std::sqrt(6.0 / static_cast<double>(in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::int64_t i = 0; i < w.size(); ++i) w[i] = dist(init_rng);
        model.weights.push_back(std::move(w));
        model.biases.emplace_back(Shape{out});
    }

    const Tensor all = vectors_to_matrix(train);
    const std::int64_t N = all.dim(0);

    // Adam state per parameter tensor.
    std::vector<Tensor> m_w, v_w, m_b, v_b;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        m_w.emplace_back(model.weights[l].shape());
        v_w.emplace_back(model.weights[l].shape());
        m_b.emplace_back(model.biases[l].shape());
        v_b.emplace_back(model.biases[l].shape());
    }
    std::int64_t step = 0;
    const AdamConfig& ac = config.adam;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::mt19937_64 rng = make_rng(derive_seed(config.seed, 0x10000 + static_cast<std::uint64_t>(epoch)));
        std::vector<std::int64_t> order(static_cast<std::size_t>(N));
        std::iota(order.begin(), order.end(), std::int64_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        const double lr = lr_schedule(epoch, ac);

        for (std::int64_t start = 0; start < N; start += config.batch) {
            const std::int64_t bn = std::min(config.batch, N - start);
            Tensor batch(Shape{bn, F});
            for (std::int64_t i = 0; i < bn; ++i)
                for (std::int64_t f = 0; f < F; ++f)
                    batch.at(i, f) = all.at(order[static_cast<std::size_t>(start + i)], f);

            GradTape<double> tape;
            const NodeId input = tape.leaf(batch, false);
            std::vector<std::pair<NodeId, NodeId>> param_nodes;
            NodeId x = input;
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                const NodeId w = tape.leaf(model.weights[l], true);
                const NodeId b = tape.leaf(model.biases[l], true);
                param_nodes.emplace_back(w, b);
                x = tape.dense(x, w, b);
                if (l + 1 < model.weights.size()) x = tape.relu(x);
            }
            const NodeId loss = tape.mse_loss(input, x);
            auto grads = tape.backward(loss);

            ++step;
            const double bc1 = 1.0 - std::pow(ac.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(ac.beta2, static_cast<double>(step));
            for (std::size_t l = 0; l < model.weights.size(); ++l) {
                detail::adam_update(model.weights[l], grads.at(param_nodes[l].first), m_w[l], v_w[l], ac, lr,
                                    bc1, bc2);
                detail::adam_update(model.biases[l], grads.at(param_nodes[l].second), m_b[l], v_b[l], ac, lr,
                                    bc1, bc2);
            }
        }
    }
    model.trained = true;
    return model;
}

std::vector<double> dense_ae_reconstruct(const DenseAe& model, const std::vector<double>& input) {
    if (model.widths.empty() || static_cast<std::int64_t>(input.size()) != model.widths.front())
        throw DimensionError("dense-ae: input length does not match the model");
    Tensor x(Shape{static_cast<std::int64_t>(input.size())}, std::vector<double>(input));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        x = dense(x, model.weights[l], model.biases[l]);
        if (l + 1 < model.weights.size()) x = relu(x);
    }
    std::vector<double> out(static_cast<std::size_t>(x.size()));
    for (std::int64_t i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = x[i];
    return out;
}

double dense_ae_score(const DenseAe& model, const FeatureVector& query) {
    if (!model.trained) throw ContractError("dense-ae: scoring an untrained model");
    const std::vector<double> rec = dense_ae_reconstruct(model, query.values);
    double acc = 0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        const double e = query.values[i] - rec[i];
        acc += e * e;
    }
    return std::sqrt(acc);
}

BaselineThreshold calibrate_outlier_threshold(const std::vector<double>& validation_scores,
                                              Orientation orientation, double margin) {
    if (validation_scores.empty()) throw ContractError("baseline threshold: empty validation set");
    if (margin < 1.0) throw ConfigError("baseline threshold: margin must be >= 1");
    BaselineThreshold t;
    t.orientation = orientation;
    t.margin = margin;
    if (orientation == Orientation::kHigherIsOutlier)
        t.threshold = *std::max_element(validation_scores.begin(), validation_scores.end()) * margin;
    else
        t.threshold = *std::min_element(validation_scores.begin(), validation_scores.end()) / margin;
    return t;
}

bool is_outlier(const BaselineThreshold& t, double score) {
    return t.orientation == Orientation::kHigherIsOutlier ? score > t.threshold : score < t.threshold;
}

namespace {

MetricsReport report_outliers(const std::vector<OutlierScore>& scores, const std::vector<Label>& labels,
                              const BaselineThreshold& threshold) {
    MetricsReport r;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = is_outlier(threshold, scores[i].value);
        const bool actual = labels[i] == Label::kFaulted;
        if (actual) {
            ++r.faulted;
            predicted ? ++r.tp : ++r.fn;
        } else {
            ++r.healthy;
            predicted ? ++r.fp : ++r.tn;
        }
    }
    const double total = static_cast<double>(r.tp + r.fp + r.tn + r.fn);
    if (total > 0) r.accuracy = static_cast<double>(r.tp + r.tn) / total;
    r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

}  // namespace

BaselineRun run_baseline(BaselineMethod method, const std::vector<const DriveCycle*>& train,
                         const std::vector<const DriveCycle*>& validation,
                         const std::vector<const DriveCycle*>& test, const BaselineOptions& options) {
    const std::vector<FeatureVector> train_vs = reduce_cycles(train, options.window);
    const std::vector<FeatureVector> val_vs = reduce_cycles(validation, options.window);
    const std::vector<FeatureVector> test_vs = reduce_cycles(test, options.window);
    if (train_vs.empty()) throw DataError("baseline: no training windows");
    if (val_vs.empty()) throw DataError("baseline: no validation windows to calibrate on");

    DenseAe dense_model;
    if (method == BaselineMethod::kDenseAe) dense_model = train_dense_ae(train_vs, options.dense);

    auto score_one = [&](const FeatureVector& q) {
        switch (method) {
            case BaselineMethod::kAbod: return abod_score(train_vs, q, options.abod_neighborhood);
            case BaselineMethod::kKnn: return knn_score(train_vs, q, options.k, options.p);
            case BaselineMethod::kDenseAe: return dense_ae_score(dense_model, q);
        }
        throw ConfigError("baseline: bad method");
    };

    auto score_group = [&](const std::vector<FeatureVector>& vs) {
        std::vector<double> out(vs.size());
        const int workers = std::max(1, std::min<int>(options.threads, static_cast<int>(vs.size())));
        if (workers <= 1) {
            for (std::size_t i = 0; i < vs.size(); ++i) out[i] = score_one(vs[i]);
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t i = static_cast<std::size_t>(w); i < vs.size();
                         i += static_cast<std::size_t>(workers))
                        out[i] = score_one(vs[i]);
                });
            for (std::thread& t : pool) t.join();
        }
        return out;
    };

    const std::vector<double> val_scores = score_group(val_vs);
    const std::vector<double> test_scores = score_group(test_vs);

    BaselineRun run;
    run.threshold = calibrate_outlier_threshold(val_scores, baseline_orientation(method), options.margin);

    std::vector<Label> labels;
    auto append = [&](const std::vector<FeatureVector>& vs, const std::vector<double>& scores) {
        for (std::size_t i = 0; i < vs.size(); ++i) {
            OutlierScore os;
            os.method = baseline_method_name(method);
            os.value = scores[i];
            os.orientation = baseline_orientation(method);
            os.sample_id = vs[i].sample_id;
            run.scores.push_back(os);
            labels.push_back(vs[i].label);

            ScoreRecord rec;
            rec.granularity = Granularity::kSample;
            rec.method = os.method;
            const std::size_t colon = os.sample_id.rfind(':');
            rec.cycle_ids = {os.sample_id.substr(0, colon)};
            rec.window_start = std::stoll(os.sample_id.substr(colon + 1));
            rec.label = vs[i].label;
            rec.loss.total = scores[i];
            run.records.push_back(std::move(rec));
        }
    };
    append(val_vs, val_scores);
    append(test_vs, test_scores);

    run.metrics = report_outliers(run.scores, labels, run.threshold);
    return run;
}

}  // namespace cycleguard
