// cycleguard: train and evaluate a convolutional autoencoder anomaly
// detector for multichannel drive-cycle recordings, generate seeded
// synthetic datasets, and run clustering baselines for comparison.
//
// Exit codes: 0 success, 2 data problems, 3 configuration or usage problems,
// 4 numeric failures.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cycleguard/baselines.hpp"
#include "cycleguard/checkpoint.hpp"
#include "cycleguard/csv.hpp"
#include "cycleguard/dataset.hpp"
#include "cycleguard/error.hpp"
#include "cycleguard/evaluation.hpp"
#include "cycleguard/svg.hpp"
#include "cycleguard/synth.hpp"
#include "cycleguard/trainer.hpp"

namespace cg = cycleguard;
using json = nlohmann::json;

namespace {

constexpr const char* kDataDirEnv = "CYCLEGUARD_DATA_DIR";

// Config-file plumbing. Values resolve flag > config file > environment >
// built-in default: a config applier only fires when its flag was absent on
// the command line, and unknown config keys are rejected.
struct ConfigBinding {
    CLI::Option* option;
    std::function<void(const json&)> apply;
};

class ConfigMap {
public:
    void bind(CLI::Option* option, std::function<void(const json&)> apply) {
        const std::string name = option->get_name(false, true);
        bindings_[name.substr(name.find_first_not_of('-'))] = ConfigBinding{option, std::move(apply)};
    }

    void apply_file(const std::string& path) const {
        std::ifstream in(path);
        if (!in) throw cg::IoError("config '" + path + "': cannot open");
        json doc;
        try {
            in >> doc;
        } catch (const json::exception& e) {
            throw cg::ConfigError("config '" + path + "': not valid JSON: " + e.what());
        }
        if (!doc.is_object()) throw cg::ConfigError("config '" + path + "': top level must be an object");
        for (const auto& [key, value] : doc.items()) {
            const auto it = bindings_.find(key);
            if (it == bindings_.end())
                throw cg::ConfigError("config '" + path + "': unknown key '" + key + "'");
            if (it->second.option->count() == 0) {
                try {
                    it->second.apply(value);
                } catch (const json::exception& e) {
                    throw cg::ConfigError("config '" + path + "': bad value for '" + key + "': " + e.what());
                }
            }
        }
    }

private:
    std::map<std::string, ConfigBinding> bindings_;
};

template <class T>
void bind_value(ConfigMap& map, CLI::Option* option, T& target) {
    map.bind(option, [&target](const json& v) { target = v.get<T>(); });
}

void resolve_data_dir(std::string& dir) {
    if (!dir.empty()) return;
    if (const char* env = std::getenv(kDataDirEnv)) dir = env;
    if (dir.empty())
        throw cg::ConfigError(std::string("data directory required: pass --data, set it in --config, or export ") +
                              kDataDirEnv);
}

// "1:10+10,2:5+15" -> stages with frozen+finetune epoch counts.
std::vector<cg::StagePlan> parse_schedule(const std::string& text) {
    std::vector<cg::StagePlan> stages;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        const std::string part = text.substr(pos, end - pos);
        const std::size_t colon = part.find(':');
        const std::size_t plus = part.find('+');
        if (colon == std::string::npos || plus == std::string::npos || plus < colon)
            throw cg::ConfigError("schedule: malformed stage '" + part + "', expected stage:frozen+finetune");
        cg::StagePlan s;
        try {
            s.stage = std::stoi(part.substr(0, colon));
            s.epochs_frozen = std::stoi(part.substr(colon + 1, plus - colon - 1));
            s.epochs_finetune = std::stoi(part.substr(plus + 1));
        } catch (const std::exception&) {
            throw cg::ConfigError("schedule: malformed stage '" + part + "', expected stage:frozen+finetune");
        }
        stages.push_back(s);
        pos = end + 1;
    }
    if (stages.empty()) throw cg::ConfigError("schedule: no stages given");
    return stages;
}

cg::StandardOptions width_options(const std::string& model_size, bool literal_widths) {
    cg::StandardOptions opt;
    if (model_size == "desk")
        opt.width_divisor = 8;
    else if (model_size == "full")
        opt.width_divisor = 1;
    else
        throw cg::ConfigError("model size must be 'desk' or 'full', got '" + model_size + "'");
    opt.literal_widths = literal_widths;
    return opt;
}

cg::SigmaMode sigma_mode_of(const std::string& name) {
    if (name == "matrix") return cg::SigmaMode::kMatrix;
    if (name == "per-row") return cg::SigmaMode::kPerRow;
    throw cg::ConfigError("sigma mode must be 'matrix' or 'per-row', got '" + name + "'");
}

struct NormalizedData {
    cg::Dataset dataset;
    cg::SplitIndices split;
};

NormalizedData load_normalized(const std::string& dir, double val_fraction, std::uint64_t seed) {
    NormalizedData d;
    d.dataset = cg::load_dataset(dir);
    std::vector<std::string> warnings;
    for (cg::DriveCycle& c : d.dataset.cycles) c = cg::normalize(c, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    d.split = cg::split_dataset(d.dataset, val_fraction, seed);
    return d;
}

std::vector<const cg::DriveCycle*> pick(const cg::Dataset& dataset, const std::vector<std::size_t>& idx) {
    std::vector<const cg::DriveCycle*> out;
    for (const std::size_t i : idx) out.push_back(&dataset.cycles[i]);
    return out;
}

int cmd_synth(const cg::SynthConfig& config, const std::string& out_dir, int threads) {
    const std::vector<cg::DriveCycle> cycles = cg::generate_synthetic(config, threads);
    cg::Dataset dataset;
    dataset.cycles = cycles;
    dataset.feature_names = cg::synth_feature_names(config.feature_count);
    dataset.maxima = cg::synth_feature_maxima(config.feature_count);
    cg::save_dataset(dataset, out_dir, &config);
    if (cycles.empty()) std::cerr << "warning: empty dataset (no cycles requested)\n";
    std::cout << "wrote " << cycles.size() << " cycles (" << config.n_healthy << " healthy, "
              << config.n_faulted << " faulted) to " << out_dir << "\n";
    return 0;
}

struct TrainArgs {
    std::string data_dir;
    std::string out_path = "model.ckpt";
    std::string log_path = "loss_log.csv";
    std::string resume_path;
    std::string schedule = "1:10+10,2:10+10";
    std::string model_size = "desk";
    std::string sigma_mode = "matrix";
    bool literal_widths = false;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    std::int64_t batch = 256;
    std::int64_t windows_per_cycle = 64;
    double lr = 8e-4;
    double decay = 0.5;
    int decay_interval = 50;
    int threads = 1;
};

int cmd_train(const TrainArgs& args) {
    const auto started = std::chrono::steady_clock::now();
    NormalizedData data = load_normalized(args.data_dir, args.val_fraction, args.seed);
    const std::vector<const cg::DriveCycle*> train_cycles = pick(data.dataset, data.split.train);
    if (train_cycles.empty()) throw cg::DataError("train: dataset has no healthy training cycles");

    cg::TrainPlan plan;
    plan.stages = parse_schedule(args.schedule);
    plan.batch_size = args.batch;
    plan.windows_per_cycle = args.windows_per_cycle;
    plan.seed = args.seed;
    plan.adam.base_lr = args.lr;
    plan.adam.decay = args.decay;
    plan.adam.decay_interval = args.decay_interval;
    plan.width = width_options(args.model_size, args.literal_widths);
    plan.sigma_mode = sigma_mode_of(args.sigma_mode);

    cg::Autoencoder resumed;
    cg::CheckpointMeta resumed_meta;
    const bool resuming = !args.resume_path.empty();
    if (resuming) {
        auto [model, meta] = cg::load_checkpoint<double>(args.resume_path);
        resumed = std::move(model);
        resumed_meta = meta;
    }

    std::ofstream log(args.log_path, std::ios::trunc);
    if (!log) throw cg::IoError("loss log '" + args.log_path + "': cannot open for writing");
    log << "epoch,stage,batch,mse,mae,std_abs,J,lr\n";
    std::int64_t last_epoch = -1;
    double epoch_sum = 0;
    std::int64_t epoch_batches = 0;
    const auto flush_epoch = [&] {
        if (last_epoch >= 0 && epoch_batches > 0)
            std::cerr << "epoch " << last_epoch << ": mean J "
                      << cg::format_double(epoch_sum / static_cast<double>(epoch_batches)) << "\n";
    };
    const auto on_batch = [&](const cg::TrainLogRow& row) {
        if (row.epoch != last_epoch) {
            flush_epoch();
            last_epoch = row.epoch;
            epoch_sum = 0;
            epoch_batches = 0;
        }
        epoch_sum += row.loss.total;
        ++epoch_batches;
        log << row.epoch << ',' << row.stage << ',' << row.batch << ',' << cg::format_double(row.loss.mse)
            << ',' << cg::format_double(row.loss.mae) << ',' << cg::format_double(row.loss.std_abs) << ','
            << cg::format_double(row.loss.total) << ',' << cg::format_double(row.lr) << '\n';
    };

    cg::TrainResult result = cg::train(plan, train_cycles, on_batch, resuming ? &resumed : nullptr,
                                       resuming ? &resumed_meta : nullptr);
    flush_epoch();
    log.flush();
    if (!log) throw cg::IoError("loss log '" + args.log_path + "': write failed");

    cg::save_checkpoint(result.model, result.meta, args.out_path);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const double final_j = result.log.empty() ? 0.0 : result.log.back().loss.total;
    std::cout << "trained " << result.meta.epoch << " epochs, final batch J " << cg::format_double(final_j)
              << ", wall " << cg::format_double(seconds) << " s\n";
    std::cout << "checkpoint: " << args.out_path << "\nloss log: " << args.log_path << "\n";
    return 0;
}

struct EvalArgs {
    std::string data_dir;
    std::string checkpoint = "model.ckpt";
    std::string granularity = "cycle";
    std::string threshold = "auto";
    std::string scores_path = "scores.csv";
    std::string report_path;
    std::string plot_path;
    std::string sigma_mode = "matrix";
    double margin = 1.05;
    double quantile = -1.0;  // >= 0 switches the auto rule to quantile
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_eval(const EvalArgs& args) {
    NormalizedData data = load_normalized(args.data_dir, args.val_fraction, args.seed);
    auto [model, meta] = cg::load_checkpoint<double>(args.checkpoint);
    (void)meta;

    const cg::Granularity granularity = cg::parse_granularity(args.granularity);
    std::vector<const cg::DriveCycle*> scored = pick(data.dataset, data.split.validation);
    {
        const std::vector<const cg::DriveCycle*> test = pick(data.dataset, data.split.test);
        scored.insert(scored.end(), test.begin(), test.end());
    }
    if (scored.empty()) throw cg::DataError("eval: nothing to score (no validation or test cycles)");

    cg::ScoreOptions opt;
    opt.sigma_mode = sigma_mode_of(args.sigma_mode);
    opt.threads = args.threads;
    opt.window = model.arch.input_h;
    const std::vector<cg::ScoreRecord> records = cg::score(model, scored, granularity, opt);

    std::vector<cg::ScoreRecord> validation_records;
    for (const cg::ScoreRecord& r : records)
        if (r.label && *r.label == cg::Label::kHealthy) validation_records.push_back(r);

    cg::ThresholdModel threshold;
    bool calibrated = false;
    if (args.threshold == "auto") {
        if (validation_records.empty())
            throw cg::DataError("eval: auto threshold needs healthy validation cycles to calibrate on");
        threshold = args.quantile >= 0.0
                        ? cg::calibrate_threshold(validation_records, cg::ThresholdRule::kQuantile, args.quantile)
                        : cg::calibrate_threshold(validation_records, cg::ThresholdRule::kMaxMargin, args.margin);
        calibrated = true;
    } else {
        try {
            std::size_t used = 0;
            threshold.threshold = std::stod(args.threshold, &used);
            if (used != args.threshold.size()) throw std::invalid_argument(args.threshold);
        } catch (const std::exception&) {
            throw cg::ConfigError("eval: threshold must be 'auto' or a number, got '" + args.threshold + "'");
        }
    }

    const cg::MetricsReport report = cg::classify_and_report(records, threshold.threshold);
    const std::string text =
        cg::format_metrics(report, "autoencoder", granularity, calibrated ? &threshold : nullptr) +
        (calibrated ? "" : "threshold: " + cg::format_double(threshold.threshold) + " (given)\n");
    std::cout << text;
    if (!args.report_path.empty()) {
        std::ofstream out(args.report_path, std::ios::trunc);
        if (!out) throw cg::IoError("report '" + args.report_path + "': cannot open for writing");
        out << text;
    }
    cg::write_scores_csv(args.scores_path, records);

    if (!args.plot_path.empty()) {
        std::vector<double> healthy, faulted;
        for (const cg::ScoreRecord& r : records)
            (r.label == cg::Label::kFaulted ? faulted : healthy).push_back(r.loss.total);
        std::vector<cg::BoxPlotCategory> cats;
        if (!healthy.empty()) cats.push_back({"healthy", cg::summarize(healthy)});
        if (!faulted.empty()) cats.push_back({"faulted", cg::summarize(faulted)});
        cg::write_box_plot_svg(args.plot_path, cats,
                               std::string("Reconstruction cost by category (") +
                                   cg::granularity_name(granularity) + ")",
                               "J");
    }
    return 0;
}

struct CompareArgs {
    std::string data_dir;
    std::string method = "all";
    std::string scores_path = "baseline_scores.csv";
    std::string report_path;
    int k = 5;
    double p = 2.0;
    int neighborhood = 0;
    double margin = 1.05;
    int dense_epochs = 200;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    int threads = 1;
};

int cmd_compare(const CompareArgs& args) {
    NormalizedData data = load_normalized(args.data_dir, args.val_fraction, args.seed);
    const std::vector<const cg::DriveCycle*> train = pick(data.dataset, data.split.train);
    const std::vector<const cg::DriveCycle*> validation = pick(data.dataset, data.split.validation);
    const std::vector<const cg::DriveCycle*> test = pick(data.dataset, data.split.test);

    std::vector<cg::BaselineMethod> methods;
    if (args.method == "all")
        methods = {cg::BaselineMethod::kAbod, cg::BaselineMethod::kKnn, cg::BaselineMethod::kDenseAe};
    else
        methods = {cg::parse_baseline_method(args.method)};

    cg::BaselineOptions opt;
    opt.k = args.k;
    opt.p = args.p;
    opt.abod_neighborhood = args.neighborhood;
    opt.margin = args.margin;
    opt.dense.epochs = args.dense_epochs;
    opt.dense.seed = args.seed;
    opt.threads = args.threads;

    std::vector<cg::ScoreRecord> all_records;
    std::string text;
    for (const cg::BaselineMethod m : methods) {
        const cg::BaselineRun run = cg::run_baseline(m, train, validation, test, opt);
        all_records.insert(all_records.end(), run.records.begin(), run.records.end());
        text += cg::format_metrics(run.metrics, cg::baseline_method_name(m), cg::Granularity::kSample, nullptr);
        text += std::string("orientation: ") +
                (run.threshold.orientation == cg::Orientation::kLowerIsOutlier ? "lower-is-outlier"
                                                                               : "higher-is-outlier") +
                "\n";
        text += "threshold: " + cg::format_double(run.threshold.threshold) + " (margin " +
                cg::format_double(run.threshold.margin) + ")\n\n";
    }
    std::cout << text;
    if (!args.report_path.empty()) {
        std::ofstream out(args.report_path, std::ios::trunc);
        if (!out) throw cg::IoError("report '" + args.report_path + "': cannot open for writing");
        out << text;
    }
    cg::write_scores_csv(args.scores_path, all_records, true);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drive-cycle anomaly detection with a convolutional autoencoder"};
    app.require_subcommand(1);
    std::string config_path;

    // synth
    cg::SynthConfig synth_config;
    std::string synth_out = "data";
    int synth_threads = 1;
    CLI::App* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    ConfigMap synth_map;
    synth->add_option("--config", config_path, "JSON config file (flags win over file values)");
    bind_value(synth_map, synth->add_option("--healthy", synth_config.n_healthy, "healthy cycle count"), synth_config.n_healthy);
    bind_value(synth_map, synth->add_option("--faulted", synth_config.n_faulted, "faulted cycle count"), synth_config.n_faulted);
    bind_value(synth_map, synth->add_option("--len", synth_config.cycle_length, "time steps per cycle"), synth_config.cycle_length);
    bind_value(synth_map, synth->add_option("--features", synth_config.feature_count, "feature channels (>= 8)"), synth_config.feature_count);
    bind_value(synth_map, synth->add_option("--seed", synth_config.seed, "master seed"), synth_config.seed);
    bind_value(synth_map, synth->add_option("--sag-depth", synth_config.sag_depth, "fault sag depth in [0,1)"), synth_config.sag_depth);
    bind_value(synth_map, synth->add_option("--sag-duty", synth_config.sag_duty, "fault sag duty in [0,0.8]"), synth_config.sag_duty);
    bind_value(synth_map, synth->add_option("--coupling-perturbation", synth_config.coupling_perturbation, "coupling weakening in [0,1]"), synth_config.coupling_perturbation);
    bind_value(synth_map, synth->add_option("--out", synth_out, "output dataset directory"), synth_out);
    bind_value(synth_map, synth->add_option("--threads", synth_threads, "worker threads"), synth_threads);

    // train
    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train the autoencoder on healthy cycles");
    ConfigMap train_map;
    train->add_option("--config", config_path, "JSON config file (flags win over file values)");
    bind_value(train_map, train->add_option("--data", train_args.data_dir, "dataset directory"), train_args.data_dir);
    bind_value(train_map, train->add_option("--out", train_args.out_path, "checkpoint output path"), train_args.out_path);
    bind_value(train_map, train->add_option("--log", train_args.log_path, "loss log CSV path"), train_args.log_path);
    bind_value(train_map, train->add_option("--resume", train_args.resume_path, "checkpoint to continue from"), train_args.resume_path);
    bind_value(train_map, train->add_option("--schedule", train_args.schedule, "stage schedule, e.g. 1:10+10,2:10+10"), train_args.schedule);
    bind_value(train_map, train->add_option("--model-size", train_args.model_size, "desk (1/8 widths) or full"), train_args.model_size);
    bind_value(train_map, train->add_option("--sigma-mode", train_args.sigma_mode, "matrix or per-row cost sigma"), train_args.sigma_mode);
    bind_value(train_map, train->add_flag("--literal-widths", train_args.literal_widths, "keep the published 521-filter width"), train_args.literal_widths);
    bind_value(train_map, train->add_option("--val-fraction", train_args.val_fraction, "healthy validation fraction"), train_args.val_fraction);
    bind_value(train_map, train->add_option("--seed", train_args.seed, "master seed"), train_args.seed);
    bind_value(train_map, train->add_option("--batch", train_args.batch, "windows per training batch"), train_args.batch);
    bind_value(train_map, train->add_option("--windows-per-cycle", train_args.windows_per_cycle, "windows drawn per cycle per batch"), train_args.windows_per_cycle);
    bind_value(train_map, train->add_option("--lr", train_args.lr, "base learning rate"), train_args.lr);
    bind_value(train_map, train->add_option("--decay", train_args.decay, "learning-rate decay factor"), train_args.decay);
    bind_value(train_map, train->add_option("--decay-interval", train_args.decay_interval, "epochs between decays"), train_args.decay_interval);
    bind_value(train_map, train->add_option("--threads", train_args.threads, "worker threads"), train_args.threads);

    // eval
    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score cycles and report detection metrics");
    ConfigMap eval_map;
    eval->add_option("--config", config_path, "JSON config file (flags win over file values)");
    bind_value(eval_map, eval->add_option("--data", eval_args.data_dir, "dataset directory"), eval_args.data_dir);
    bind_value(eval_map, eval->add_option("--checkpoint", eval_args.checkpoint, "trained checkpoint"), eval_args.checkpoint);
    bind_value(eval_map, eval->add_option("--granularity", eval_args.granularity, "batch, cycle or sample"), eval_args.granularity);
    bind_value(eval_map, eval->add_option("--threshold", eval_args.threshold, "'auto' or a numeric threshold"), eval_args.threshold);
    bind_value(eval_map, eval->add_option("--margin", eval_args.margin, "auto threshold margin (>= 1)"), eval_args.margin);
    bind_value(eval_map, eval->add_option("--quantile", eval_args.quantile, "use quantile rule at this q instead of max-margin"), eval_args.quantile);
    bind_value(eval_map, eval->add_option("--scores", eval_args.scores_path, "scores CSV output path"), eval_args.scores_path);
    bind_value(eval_map, eval->add_option("--report", eval_args.report_path, "also write the metrics report here"), eval_args.report_path);
    bind_value(eval_map, eval->add_option("--plot", eval_args.plot_path, "write a five-number box plot SVG"), eval_args.plot_path);
    bind_value(eval_map, eval->add_option("--sigma-mode", eval_args.sigma_mode, "matrix or per-row cost sigma"), eval_args.sigma_mode);
    bind_value(eval_map, eval->add_option("--val-fraction", eval_args.val_fraction, "healthy validation fraction"), eval_args.val_fraction);
    bind_value(eval_map, eval->add_option("--seed", eval_args.seed, "split seed (must match training)"), eval_args.seed);
    bind_value(eval_map, eval->add_option("--threads", eval_args.threads, "worker threads"), eval_args.threads);

    // compare
    CompareArgs compare_args;
    CLI::App* compare = app.add_subcommand("compare", "run baseline outlier detectors");
    ConfigMap compare_map;
    compare->add_option("--config", config_path, "JSON config file (flags win over file values)");
    bind_value(compare_map, compare->add_option("--data", compare_args.data_dir, "dataset directory"), compare_args.data_dir);
    bind_value(compare_map, compare->add_option("--method", compare_args.method, "abod, knn, dense-ae or all"), compare_args.method);
    bind_value(compare_map, compare->add_option("--k", compare_args.k, "neighbor count for knn"), compare_args.k);
    bind_value(compare_map, compare->add_option("--p", compare_args.p, "Minkowski order for knn"), compare_args.p);
    bind_value(compare_map, compare->add_option("--neighborhood", compare_args.neighborhood, "abod pair pool size (0 = all)"), compare_args.neighborhood);
    bind_value(compare_map, compare->add_option("--margin", compare_args.margin, "threshold margin (>= 1)"), compare_args.margin);
    bind_value(compare_map, compare->add_option("--dense-epochs", compare_args.dense_epochs, "dense autoencoder training epochs"), compare_args.dense_epochs);
    bind_value(compare_map, compare->add_option("--scores", compare_args.scores_path, "scores CSV output path"), compare_args.scores_path);
    bind_value(compare_map, compare->add_option("--report", compare_args.report_path, "also write the metrics report here"), compare_args.report_path);
    bind_value(compare_map, compare->add_option("--val-fraction", compare_args.val_fraction, "healthy validation fraction"), compare_args.val_fraction);
    bind_value(compare_map, compare->add_option("--seed", compare_args.seed, "split and training seed"), compare_args.seed);
    bind_value(compare_map, compare->add_option("--threads", compare_args.threads, "worker threads"), compare_args.threads);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    try {
        if (!config_path.empty()) {
            if (synth->parsed()) synth_map.apply_file(config_path);
            if (train->parsed()) train_map.apply_file(config_path);
            if (eval->parsed()) eval_map.apply_file(config_path);
            if (compare->parsed()) compare_map.apply_file(config_path);
        }
        if (synth->parsed()) return cmd_synth(synth_config, synth_out, synth_threads);
        if (train->parsed()) {
            resolve_data_dir(train_args.data_dir);
            return cmd_train(train_args);
        }
        if (eval->parsed()) {
            resolve_data_dir(eval_args.data_dir);
            return cmd_eval(eval_args);
        }
        if (compare->parsed()) {
            resolve_data_dir(compare_args.data_dir);
            return cmd_compare(compare_args);
        }
    } catch (const cg::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cg::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const cg::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cg::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 3;
}
