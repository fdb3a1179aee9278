#include "cycleguard/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include "cycleguard/csv.hpp"
#include "cycleguard/error.hpp"

namespace cycleguard {

const char* granularity_name(Granularity g) {
    switch (g) {
        case Granularity::kBatch: return "batch";
        case Granularity::kCycle: return "cycle";
        case Granularity::kSample: return "sample";
    }
    return "?";
}

Granularity parse_granularity(const std::string& s) {
    if (s == "batch") return Granularity::kBatch;
    if (s == "cycle") return Granularity::kCycle;
    if (s == "sample") return Granularity::kSample;
    throw ConfigError("unknown granularity '" + s + "' (expected batch, cycle or sample)");
}

namespace {

struct WindowRef {
    const DriveCycle* cycle;
    SampleWindow window;
};

// Per-window scoring shared by all granularities: tile every cycle, forward
// each window alone (per-sample independence makes this equal to any
// batching), parallel over window index.
std::vector<ScoreRecord> score_samples(const Autoencoder& model,
                                       const std::vector<const DriveCycle*>& cycles,
                                       const ScoreOptions& opt) {
    std::vector<WindowRef> refs;
    for (const DriveCycle* c : cycles) {
        std::vector<SampleWindow> ws = tile_windows(*c, opt.window);
        for (SampleWindow& w : ws) refs.push_back(WindowRef{c, std::move(w)});
    }
    std::vector<ScoreRecord> out(refs.size());
    const std::int64_t model_width = model.arch.input_w;

    auto score_one = [&](std::size_t i) {
        const WindowRef& r = refs[i];
        Batch single;
        single.samples.push_back(r.window);
        const Tensor input = single.tensor(model_width);
        const ForwardResultT<double> fw = forward(model, input);
        const LossOptions lo{r.window.matrix.dim(1), opt.sigma_mode};
        ScoreRecord& rec = out[i];
        rec.granularity = Granularity::kSample;
        rec.cycle_ids = {r.cycle->id};
        rec.window_start = r.window.start_index;
        rec.label = r.cycle->label;
        rec.loss = composite_loss(input, fw.reconstruction, lo);
    };

    const int workers = std::max(1, std::min<int>(opt.threads, static_cast<int>(refs.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < refs.size(); ++i) score_one(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t i = static_cast<std::size_t>(w); i < refs.size();
                     i += static_cast<std::size_t>(workers))
                    score_one(i);
            });
        for (std::thread& t : pool) t.join();
    }
    return out;
}

// The cycle J is the plain mean (sum in window order, one division) of the
// window Js, so "cycle J == mean(sample Js)" holds bitwise against the same
// computation. Components average the same way and match total up to last-bit
// rounding.
LossBreakdown mean_of(const std::vector<const LossBreakdown*>& parts) {
    LossBreakdown m;
    for (const LossBreakdown* p : parts) {
        m.mse += p->mse;
        m.mae += p->mae;
        m.std_abs += p->std_abs;
        m.total += p->total;
    }
    const double n = static_cast<double>(parts.size());
    m.mse /= n;
    m.mae /= n;
    m.std_abs /= n;
    m.total /= n;
    return m;
}

std::vector<ScoreRecord> roll_up_cycles(const std::vector<ScoreRecord>& samples) {
    std::vector<ScoreRecord> out;
    for (std::size_t i = 0; i < samples.size();) {
        std::size_t j = i;
        std::vector<const LossBreakdown*> parts;
        while (j < samples.size() && samples[j].cycle_ids == samples[i].cycle_ids) {
            parts.push_back(&samples[j].loss);
            ++j;
        }
        ScoreRecord rec;
        rec.granularity = Granularity::kCycle;
        rec.cycle_ids = samples[i].cycle_ids;
        rec.label = samples[i].label;
        rec.loss = mean_of(parts);
        out.push_back(std::move(rec));
        i = j;
    }
    return out;
}

// Label-pure groups in encounter order; J over the whole group tensor.
std::vector<ScoreRecord> score_batches(const Autoencoder& model,
                                       const std::vector<const DriveCycle*>& cycles,
                                       const ScoreOptions& opt) {
    std::vector<ScoreRecord> out;
    for (const Label want : {Label::kHealthy, Label::kFaulted}) {
        Batch group;
        std::vector<std::string> ids;
        auto flush = [&] {
            if (group.samples.empty()) return;
            const Tensor input = group.tensor(model.arch.input_w);
            const ForwardResultT<double> fw = forward(model, input);
            const LossOptions lo{group.samples.front().matrix.dim(1), opt.sigma_mode};
            ScoreRecord rec;
            rec.granularity = Granularity::kBatch;
            std::vector<std::string> uniq = ids;
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            rec.cycle_ids = std::move(uniq);
            rec.label = want;
            rec.loss = composite_loss(input, fw.reconstruction, lo);
            out.push_back(std::move(rec));
            group.samples.clear();
            ids.clear();
        };
        for (const DriveCycle* c : cycles) {
            if (c->label != want) continue;
            for (SampleWindow& w : tile_windows(*c, opt.window)) {
                ids.push_back(c->id);
                group.samples.push_back(std::move(w));
                if (static_cast<std::int64_t>(group.samples.size()) == opt.batch_size) flush();
            }
        }
        flush();
    }
    return out;
}

}  // namespace

std::vector<ScoreRecord> score(const Autoencoder& model, const std::vector<const DriveCycle*>& cycles,
                               Granularity granularity, const ScoreOptions& options) {
    if (cycles.empty()) throw DataError("score: no cycles given");
    for (const DriveCycle* c : cycles)
        if (!c->normalized) throw StateError("score: cycle '" + c->id + "' is not normalized");
    if (options.window != model.arch.input_h)
        throw ConfigError("score: window " + std::to_string(options.window) +
                          " does not match the model input height " + std::to_string(model.arch.input_h));
    switch (granularity) {
        case Granularity::kSample: return score_samples(model, cycles, options);
        case Granularity::kCycle: return roll_up_cycles(score_samples(model, cycles, options));
        case Granularity::kBatch: return score_batches(model, cycles, options);
    }
    throw ConfigError("score: bad granularity");
}

FiveNumberSummary summarize(const std::vector<double>& values) {
    if (values.empty()) throw ContractError("summarize: need at least one value");
    std::vector<double> v = values;
    std::sort(v.begin(), v.end());
    auto quantile = [&v](double q) {
        const double h = q * static_cast<double>(v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    FiveNumberSummary s;
    s.min = v.front();
    s.q25 = quantile(0.25);
    s.median = quantile(0.5);
    s.q75 = quantile(0.75);
    s.max = v.back();
    return s;
}

ThresholdModel calibrate_threshold(const std::vector<ScoreRecord>& validation_scores, ThresholdRule rule,
                                   double param) {
    if (validation_scores.empty()) throw ContractError("calibrate_threshold: empty validation set");
    std::vector<double> values;
    for (const ScoreRecord& r : validation_scores) {
        if (r.label && *r.label == Label::kFaulted)
            throw ContractError("calibrate_threshold: validation scores must come from healthy data");
        values.push_back(r.loss.total);
    }
    ThresholdModel m;
    m.rule = rule;
    m.param = param;
    m.validation = summarize(values);
    if (rule == ThresholdRule::kMaxMargin) {
        if (param < 1.0) throw ConfigError("calibrate_threshold: max-margin parameter must be >= 1");
        m.threshold = m.validation.max * param;
    } else {
        if (!(param >= 0.0 && param <= 1.0))
            throw ConfigError("calibrate_threshold: quantile parameter must be in [0, 1]");
        std::sort(values.begin(), values.end());
        const double h = param * static_cast<double>(values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = static_cast<std::size_t>(std::ceil(h));
        m.threshold = values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    }
    return m;
}

MetricsReport classify_and_report(const std::vector<ScoreRecord>& scores, double threshold) {
    MetricsReport r;
    for (const ScoreRecord& s : scores) {
        if (!s.label) throw ContractError("classify_and_report: unlabeled record");
        const bool predicted_faulted = s.loss.total > threshold;
        const bool is_faulted = *s.label == Label::kFaulted;
        if (is_faulted) {
            ++r.faulted;
            predicted_faulted ? ++r.tp : ++r.fn;
        } else {
            ++r.healthy;
            predicted_faulted ? ++r.fp : ++r.tn;
        }
    }
    const double total = static_cast<double>(r.tp + r.fp + r.tn + r.fn);
    if (total > 0) r.accuracy = static_cast<double>(r.tp + r.tn) / total;
    r.precision = (r.tp + r.fp) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = (r.tp + r.fn) > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

std::string format_metrics(const MetricsReport& r, const std::string& method, Granularity granularity,
                           const ThresholdModel* t) {
    std::string s;
    s += "method: " + (method.empty() ? std::string("autoencoder") : method) + "\n";
    s += "granularity: " + std::string(granularity_name(granularity)) + "\n";
    if (t) {
        s += "threshold: " + format_double(t->threshold) +
             (t->rule == ThresholdRule::kMaxMargin ? " (max-margin, margin " : " (quantile, q ") +
             format_double(t->param) + ")\n";
        s += "validation five-number: " + format_double(t->validation.min) + " " +
             format_double(t->validation.q25) + " " + format_double(t->validation.median) + " " +
             format_double(t->validation.q75) + " " + format_double(t->validation.max) + "\n";
    }
    s += "records: " + format_int(r.healthy + r.faulted) + " (healthy " + format_int(r.healthy) +
         ", faulted " + format_int(r.faulted) + ")\n";
    s += "accuracy: " + format_double(r.accuracy) + "\n";
    s += "precision: " + format_double(r.precision) + "\n";
    s += "recall: " + format_double(r.recall) + "\n";
    s += "f1: " + format_double(r.f1) + "\n";
    s += "confusion: TP " + format_int(r.tp) + " FP " + format_int(r.fp) + " TN " + format_int(r.tn) +
         " FN " + format_int(r.fn) + "\n";
    return s;
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRecord>& records,
                      bool method_column) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("scores csv '" + path + "': cannot open for writing");
    if (method_column) out << "method,";
    out << "granularity,cycle_id,window_start,label,mse,mae,std_abs,J\n";
    for (const ScoreRecord& r : records) {
        if (method_column) out << (r.method.empty() ? "autoencoder" : r.method) << ',';
        out << granularity_name(r.granularity) << ',';
        for (std::size_t i = 0; i < r.cycle_ids.size(); ++i) {
            if (i) out << ';';
            out << r.cycle_ids[i];
        }
        out << ',';
        if (r.window_start >= 0) out << format_int(r.window_start);
        out << ',' << (r.label ? label_name(*r.label) : "unlabeled") << ',' << format_double(r.loss.mse)
            << ',' << format_double(r.loss.mae) << ',' << format_double(r.loss.std_abs) << ','
            << format_double(r.loss.total) << '\n';
    }
    out.flush();
    if (!out) throw IoError("scores csv '" + path + "': write failed");
}

}  // namespace cycleguard
