// Release gate: eight end-to-end criteria, one [PASS]/[FAIL] line each.
// Exit code is the number of failed criteria. Tolerances are pinned here on
// purpose; loosening them is a release decision, not a test edit.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cycleguard/baselines.hpp"
#include "cycleguard/checkpoint.hpp"
#include "cycleguard/csv.hpp"
#include "cycleguard/dataset.hpp"
#include "cycleguard/evaluation.hpp"
#include "cycleguard/synth.hpp"
#include "cycleguard/trainer.hpp"
#include "oracles.hpp"

using namespace cycleguard;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 42;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Gate {
    int failed = 0;

    void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& criterion) {
        const auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        std::string detail;
        try {
            std::tie(ok, detail) = criterion();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        char line[512];
        std::snprintf(line, sizeof(line), "[%s] %s: %s (%.1fs)", ok ? "PASS" : "FAIL", name.c_str(),
                      detail.c_str(), seconds_since(t0));
        std::puts(line);
        std::fflush(stdout);
        if (!ok) ++failed;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Shared artifacts of the convergence run, reused by the criteria that the
// protocol defines as "after the convergence run".
struct SharedState {
    Dataset data;
    SplitIndices split;
    TrainResult trained;
    bool trained_ok = false;
    double first_epoch_j = 0;
    double final_epoch_j = 0;
    double ae_sample_f1 = -1;
    fs::path dir;
};

std::vector<const DriveCycle*> pick(const Dataset& d, const std::vector<std::size_t>& idx) {
    std::vector<const DriveCycle*> out;
    for (const std::size_t i : idx) out.push_back(&d.cycles[i]);
    return out;
}

Dataset make_corpus(const SynthConfig& cfg) {
    Dataset d;
    for (DriveCycle& c : generate_synthetic(cfg, 1)) d.cycles.push_back(normalize(c));
    d.feature_names = synth_feature_names(cfg.feature_count);
    d.maxima = synth_feature_maxima(cfg.feature_count);
    return d;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_log_csv(const fs::path& p, const std::vector<TrainLogRow>& rows) {
    std::ofstream out(p, std::ios::trunc);
    out << "epoch,stage,batch,mse,mae,std_abs,J,lr\n";
    for (const TrainLogRow& r : rows)
        out << format_int(r.epoch) << ',' << r.stage << ',' << format_int(r.batch) << ','
            << format_double(r.loss.mse) << ',' << format_double(r.loss.mae) << ','
            << format_double(r.loss.std_abs) << ',' << format_double(r.loss.total) << ','
            << format_double(r.lr) << '\n';
}

// ---- criterion 1: analytic vs central-difference gradients -----------------

ArchitectureSpec toy_stage1_spec() {
    ArchitectureSpec spec = ArchitectureSpec::standard(1, StandardOptions{8, false});
    spec.input_h = 8;
    spec.input_w = 8;
    spec.decoder.clear();
    const auto ext = spec.encoder_extents();
    for (int i = static_cast<int>(spec.encoder.size()) - 1; i >= 0; --i) {
        LayerSpec d;
        d.transposed = true;
        d.conv = spec.encoder[static_cast<std::size_t>(i)].conv;
        d.conv.filters = static_cast<int>(spec.encoder_in_channels(static_cast<std::size_t>(i)));
        d.conv.out_h = static_cast<int>(ext[static_cast<std::size_t>(i)].first);
        d.conv.out_w = static_cast<int>(ext[static_cast<std::size_t>(i)].second);
        d.relu = (i != 0);
        spec.decoder.push_back(d);
    }
    spec.validate();
    return spec;
}

std::pair<bool, std::string> check_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const ArchitectureSpec spec = toy_stage1_spec();
    std::mt19937_64 rng = make_rng(derive_seed(kSeed, 7));
    Autoencoder model = build<double>(spec, rng);

    Tensor x(Shape{1, 8, 8, 1});
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = dist(rng);
    const LossOptions lo{8, SigmaMode::kMatrix};

    GradTape<double> tape;
    const TapeBindings b = forward_on_tape(tape, model, x);
    const NodeId loss = tape.composite_loss(b.input, b.reconstruction, lo);
    const auto grads = tape.backward(loss);

    const auto loss_now = [&] { return composite_loss(x, forward(model, x).reconstruction, lo).total; };
    const double h = 1e-5;
    double max_rel = 0;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        for (const bool weights : {true, false}) {
            Tensor& param = weights ? model.layers[l].weights : model.layers[l].bias;
            const Tensor& analytic =
                grads.at(weights ? b.layer_nodes[l].first : b.layer_nodes[l].second);
            for (std::int64_t i = 0; i < param.size(); ++i) {
                const double keep = param[i];
                param[i] = keep + h;
                const double up = loss_now();
                param[i] = keep - h;
                const double down = loss_now();
                param[i] = keep;
                const double numeric = (up - down) / (2.0 * h);
                const double rel =
                    std::fabs(analytic[i] - numeric) /
                    std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-4});
                max_rel = std::max(max_rel, rel);
            }
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = max_rel < 1e-4 && secs < 60.0;
    return {ok, "stage-1 toy 8x8, max rel err " + fmt(max_rel) + (secs < 60.0 ? "" : ", over 60s budget")};
}

// ---- criterion 2: brute-force oracles over random instances ----------------

std::pair<bool, std::string> check_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(913);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    const auto fill = [&](Tensor& t) {
        for (std::int64_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
    };
    double worst = 0;
    std::string worst_name = "none";
    const auto track = [&](const char* name, double err) {
        if (err > worst) {
            worst = err;
            worst_name = name;
        }
    };

    for (int it = 0; it < 120; ++it) {
        const std::int64_t B = 1 + static_cast<std::int64_t>(rng() % 2);
        const std::int64_t H = 2 + static_cast<std::int64_t>(rng() % 6);
        const std::int64_t W = 2 + static_cast<std::int64_t>(rng() % 6);
        const std::int64_t C = 1 + static_cast<std::int64_t>(rng() % 3);
        ConvSpec spec;
        spec.kernel_h = 1 + static_cast<int>(rng() % 3);
        spec.kernel_w = 1 + static_cast<int>(rng() % 3);
        spec.stride_h = 1 + static_cast<int>(rng() % 2);
        spec.stride_w = 1 + static_cast<int>(rng() % 2);
        spec.filters = 1 + static_cast<int>(rng() % 4);
        spec.padding = Padding::kSame;
        Tensor x(Shape{B, H, W, C}), w(Shape{spec.kernel_h, spec.kernel_w, C, spec.filters}),
            bias(Shape{spec.filters});
        fill(x);
        fill(w);
        fill(bias);

        // conv2d against the materialized-padding reference.
        const Tensor got = conv2d(x, w, bias, spec);
        const Tensor want = oracles::naive_conv2d(x, w, bias, spec);
        for (std::int64_t i = 0; i < got.size(); ++i)
            track("conv2d", std::fabs(got[i] - want[i]) / std::max(1.0, std::fabs(want[i])));

        // Adjoint inner-product identity with the same weight tensor.
        Tensor y(got.shape());
        fill(y);
        ConvSpec tspec = spec;
        tspec.filters = static_cast<int>(C);
        tspec.out_h = static_cast<int>(H);
        tspec.out_w = static_cast<int>(W);
        Tensor zero_bias(Shape{static_cast<std::int64_t>(tspec.filters)});
        const Tensor back = conv_transpose2d(y, w, zero_bias, tspec);
        const double lhs = oracles::dot(y, got) - [&] {
            double s = 0;
            for (std::int64_t i = 0; i < y.size(); ++i)
                s += y[i] * bias[i % static_cast<std::int64_t>(spec.filters)];
            return s;
        }();
        const double rhs = oracles::dot(back, x);
        track("adjoint", std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs)));
    }

    for (int it = 0; it < 120; ++it) {
        const std::int64_t B = 1 + static_cast<std::int64_t>(rng() % 4);
        const std::int64_t in = 1 + static_cast<std::int64_t>(rng() % 6);
        const std::int64_t out = 1 + static_cast<std::int64_t>(rng() % 6);
        Tensor x(Shape{B, in}), w(Shape{in, out}), bias(Shape{out});
        fill(x);
        fill(w);
        fill(bias);
        const Tensor got = dense(x, w, bias);
        const Tensor want = oracles::naive_dense(x, w, bias);
        for (std::int64_t i = 0; i < got.size(); ++i)
            track("dense", std::fabs(got[i] - want[i]) / std::max(1.0, std::fabs(want[i])));
    }

    for (int it = 0; it < 120; ++it) {
        std::vector<double> v(2 + static_cast<std::size_t>(rng() % 30));
        for (double& e : v) e = dist(rng);
        const FiveNumberSummary s = summarize(v);
        const double qs[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
        const double got[5] = {s.min, s.q25, s.median, s.q75, s.max};
        for (int i = 0; i < 5; ++i)
            track("quantile", std::fabs(got[i] - oracles::naive_quantile(v, qs[i])) /
                                  std::max(1.0, std::fabs(got[i])));
    }

    const auto make_vecs = [&](std::size_t n, std::size_t f) {
        std::vector<FeatureVector> vs(n);
        for (FeatureVector& v : vs)
            for (std::size_t i = 0; i < f; ++i) v.values.push_back(dist(rng));
        return vs;
    };
    for (int it = 0; it < 120; ++it) {
        const auto train = make_vecs(8 + rng() % 8, 4);
        const auto q = make_vecs(1, 4).front();
        const int k = 1 + static_cast<int>(rng() % 4);
        std::vector<std::vector<double>> raw;
        for (const FeatureVector& v : train) raw.push_back(v.values);
        track("knn", std::fabs(knn_score(train, q, k, 2.0) - oracles::brute_knn(raw, q.values, k, 2.0)) /
                         std::max(1.0, oracles::brute_knn(raw, q.values, k, 2.0)));
        double expect = 0;
        if (oracles::brute_abod(raw, q.values, 0, &expect))
            track("abod", std::fabs(abod_score(train, q) - expect) /
                              std::max(1e-6, std::fabs(expect)));
    }

    const double secs = seconds_since(t0);
    const bool ok = worst < 1e-8 && secs < 120.0;
    return {ok, "120 instances per core, worst " + worst_name + " err " + fmt(worst) +
                    (secs < 120.0 ? "" : ", over 120s budget")};
}

// ---- criterion 3: composite cost contract ----------------------------------

std::pair<bool, std::string> check_loss_contract() {
    Tensor x(Shape{1, 2, 2, 1});
    x.at(0, 0, 0, 0) = 0.3;
    x.at(0, 0, 1, 0) = 0.7;
    x.at(0, 1, 0, 0) = 0.1;
    x.at(0, 1, 1, 0) = 0.9;
    const LossBreakdown self = composite_loss(x, x, LossOptions{2, SigmaMode::kMatrix});
    const bool zero = self.total == 0.0 && self.mse == 0.0 && self.mae == 0.0 && self.std_abs == 0.0;

    Tensor a(Shape{1, 1, 2, 1}), rec(Shape{1, 1, 2, 1});
    a.at(0, 0, 0, 0) = 1.0;
    a.at(0, 0, 1, 0) = 3.0;
    rec.at(0, 0, 0, 0) = 0.0;
    rec.at(0, 0, 1, 0) = 1.0;
    const LossBreakdown worked = composite_loss(a, rec, LossOptions{2, SigmaMode::kMatrix});
    const bool example = worked.mse == 2.5 && worked.mae == 1.5 && worked.std_abs == 0.5 &&
                         worked.total == 4.5;
    return {zero && example, std::string("J(x,x)=") + (zero ? "0 exact" : "NONZERO") +
                                 ", worked example J=" + format_double(worked.total) +
                                 (example ? " exact" : " (want 4.5)")};
}

// ---- criterion 4: staged desk-scale convergence ----------------------------

std::pair<bool, std::string> check_convergence(SharedState& s) {
    const auto t0 = std::chrono::steady_clock::now();
    SynthConfig cfg;
    cfg.seed = kSeed;
    cfg.n_healthy = 30;
    cfg.n_faulted = 10;
    cfg.cycle_length = 640;
    cfg.feature_count = 8;
    cfg.sag_depth = 0.6;
    cfg.sag_duty = 0.5;
    cfg.coupling_perturbation = 1.0;
    s.data = make_corpus(cfg);
    s.split = split_dataset(s.data, 1.0 / 3.0, kSeed);
    if (s.split.train.size() != 20 || s.split.validation.size() != 10 || s.split.test.size() != 10)
        return {false, "unexpected split sizes"};

    TrainPlan plan;
    plan.stages = {StagePlan{1, 0, 30}, StagePlan{2, 10, 20}};
    plan.batch_size = 32;
    plan.windows_per_cycle = 8;
    plan.seed = kSeed;
    plan.width.width_divisor = 8;
    s.trained = train(plan, pick(s.data, s.split.train));

    std::vector<double> sums(60, 0.0);
    std::vector<int> counts(60, 0);
    for (const TrainLogRow& r : s.trained.log) {
        sums[static_cast<std::size_t>(r.epoch)] += r.loss.total;
        ++counts[static_cast<std::size_t>(r.epoch)];
    }
    if (counts.front() == 0 || counts.back() == 0) return {false, "missing epochs in the training log"};
    s.first_epoch_j = sums.front() / counts.front();
    s.final_epoch_j = sums.back() / counts.back();
    s.trained_ok = true;

    const double secs = seconds_since(t0);
    const bool ok = s.final_epoch_j < 0.2 * s.first_epoch_j && secs < 900.0;
    return {ok, "epoch-mean J " + fmt(s.first_epoch_j) + " -> " + fmt(s.final_epoch_j) + " (ratio " +
                    fmt(s.final_epoch_j / s.first_epoch_j) + ", need < 0.2)" +
                    (secs < 900.0 ? "" : ", over 15min budget")};
}

// ---- criterion 5: healthy/faulted separation -------------------------------

std::pair<bool, std::string> check_separation(SharedState& s) {
    if (!s.trained_ok) return {false, "convergence run unavailable"};
    std::vector<const DriveCycle*> scored = pick(s.data, s.split.validation);
    const std::vector<const DriveCycle*> test = pick(s.data, s.split.test);
    scored.insert(scored.end(), test.begin(), test.end());

    const auto evaluate = [&](Granularity g) {
        const std::vector<ScoreRecord> records = score(s.trained.model, scored, g);
        std::vector<ScoreRecord> healthy;
        for (const ScoreRecord& r : records)
            if (r.label == Label::kHealthy) healthy.push_back(r);
        const ThresholdModel thr = calibrate_threshold(healthy, ThresholdRule::kMaxMargin, 1.05);
        return classify_and_report(records, thr.threshold);
    };

    const MetricsReport cycle = evaluate(Granularity::kCycle);
    const MetricsReport sample = evaluate(Granularity::kSample);
    s.ae_sample_f1 = sample.f1;

    const bool ok = cycle.accuracy >= 0.95 && cycle.recall >= 0.9 && sample.accuracy >= 0.85;
    return {ok, "cycle acc " + fmt(cycle.accuracy) + " recall " + fmt(cycle.recall) +
                    " (need >= 0.95 / 0.9), sample acc " + fmt(sample.accuracy) + " (need >= 0.85)"};
}

// ---- criterion 6: baseline ordering ----------------------------------------

std::pair<bool, std::string> check_ordering(SharedState& s) {
    if (!s.trained_ok || s.ae_sample_f1 < 0) return {false, "separation run unavailable"};
    BaselineOptions opt;
    opt.margin = 1.05;
    opt.dense.seed = kSeed;
    const auto f1_of = [&](BaselineMethod m) {
        return run_baseline(m, pick(s.data, s.split.train), pick(s.data, s.split.validation),
                            pick(s.data, s.split.test), opt)
            .metrics.f1;
    };
    const double abod = f1_of(BaselineMethod::kAbod);
    const double knn = f1_of(BaselineMethod::kKnn);
    const double dense = f1_of(BaselineMethod::kDenseAe);
    const double ae = s.ae_sample_f1;
    const bool ok = ae >= abod && ae >= knn && ae >= dense && dense <= knn;
    return {ok, "F1 ae " + fmt(ae) + " vs abod " + fmt(abod) + ", knn " + fmt(knn) + ", dense-ae " +
                    fmt(dense) + (dense <= knn ? "" : " (dense-ae must not beat knn)")};
}

// ---- criterion 7: bitwise reproducibility ----------------------------------

std::pair<bool, std::string> check_reproducibility(SharedState& s) {
    const auto run_once = [&](const std::string& tag) {
        SynthConfig cfg;
        cfg.seed = 11;
        cfg.n_healthy = 8;
        cfg.n_faulted = 3;
        cfg.cycle_length = 384;
        cfg.feature_count = 8;
        Dataset data = make_corpus(cfg);
        const SplitIndices split = split_dataset(data, 0.25, 11);

        TrainPlan plan;
        plan.stages = {StagePlan{1, 0, 2}, StagePlan{2, 1, 1}};
        plan.batch_size = 8;
        plan.windows_per_cycle = 4;
        plan.seed = 11;
        plan.width.width_divisor = 8;
        const TrainResult result = train(plan, pick(data, split.train));

        const fs::path ckpt = s.dir / (tag + ".ckpt");
        const fs::path log = s.dir / (tag + "-loss.csv");
        const fs::path scores_csv = s.dir / (tag + "-scores.csv");
        save_checkpoint(result.model, result.meta, ckpt.string());
        write_log_csv(log, result.log);
        std::vector<const DriveCycle*> scored = pick(data, split.validation);
        const std::vector<const DriveCycle*> test = pick(data, split.test);
        scored.insert(scored.end(), test.begin(), test.end());
        write_scores_csv(scores_csv.string(), score(result.model, scored, Granularity::kSample));
        return std::array<fs::path, 3>{ckpt, log, scores_csv};
    };

    const auto a = run_once("repro-a");
    const auto b = run_once("repro-b");
    std::string differ;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string ba = read_bytes(a[i]), bb = read_bytes(b[i]);
        if (ba.empty() || ba != bb) differ += (differ.empty() ? "" : ", ") + a[i].filename().string();
    }
    return {differ.empty(),
            differ.empty() ? "checkpoint, loss log and scores CSV bitwise identical across two runs"
                           : "differs: " + differ};
}

// ---- criterion 8: checkpoint round-trip ------------------------------------

std::pair<bool, std::string> check_round_trip(SharedState& s) {
    if (!s.trained_ok) return {false, "convergence run unavailable"};
    const fs::path path = s.dir / "round-trip.ckpt";
    save_checkpoint(s.trained.model, s.trained.meta, path.string());
    const auto [loaded, meta] = load_checkpoint<double>(path.string());
    (void)meta;

    const std::vector<const DriveCycle*> fixed = {&s.data.cycles[s.split.validation.front()],
                                                  &s.data.cycles[s.split.test.front()]};
    const std::vector<ScoreRecord> before = score(s.trained.model, fixed, Granularity::kSample);
    const std::vector<ScoreRecord> after = score(loaded, fixed, Granularity::kSample);
    if (before.size() != after.size()) return {false, "record count changed after reload"};
    for (std::size_t i = 0; i < before.size(); ++i) {
        const LossBreakdown &x = before[i].loss, &y = after[i].loss;
        if (x.mse != y.mse || x.mae != y.mae || x.std_abs != y.std_abs || x.total != y.total)
            return {false, "scores differ at record " + std::to_string(i)};
    }
    return {true, std::to_string(before.size()) + " window scores bitwise identical after reload"};
}

}  // namespace

int main() {
    SharedState shared;
    shared.dir = fs::temp_directory_path() / ("cg-acceptance-" + std::to_string(std::random_device{}()));
    fs::create_directories(shared.dir);

    Gate gate;
    gate.run("gradient-correctness", [] { return check_gradients(); });
    gate.run("numerical-core-oracles", [] { return check_oracles(); });
    gate.run("loss-contract", [] { return check_loss_contract(); });
    gate.run("convergence", [&] { return check_convergence(shared); });
    gate.run("separation", [&] { return check_separation(shared); });
    gate.run("baseline-ordering", [&] { return check_ordering(shared); });
    gate.run("reproducibility", [&] { return check_reproducibility(shared); });
    gate.run("checkpoint-round-trip", [&] { return check_round_trip(shared); });

    std::error_code ec;
    fs::remove_all(shared.dir, ec);
    std::printf("acceptance: %d/8 criteria passed\n", 8 - gate.failed);
    return gate.failed;
}
