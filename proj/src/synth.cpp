#include "cycleguard/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "cycleguard/error.hpp"
#include "cycleguard/rng.hpp"

namespace cycleguard {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Channel layout: the first eight are fixed named channels, the rest are
// generic coupled sensors.
enum Channel : int {
    kSpeed = 0,
    kRpm = 1,
    kVoltage = 2,
    kCurrent = 3,
    kSoc = 4,
    kTemp = 5,
    kPrndl = 6,
    kBrake = 7,
    kFirstSensor = 8,
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double noise(std::mt19937_64& rng) { return uniform(rng, -1.0, 1.0); }

// Latent drive intensity in [0.05, 0.95]: three incommensurate sinusoids
// around 0.5 with per-cycle phases.
std::vector<double> intensity_series(std::int64_t T, std::mt19937_64& rng) {
    const double p1 = uniform(rng, 0.0, kTau), p2 = uniform(rng, 0.0, kTau), p3 = uniform(rng, 0.0, kTau);
    std::vector<double> s(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t) {
        const double x = static_cast<double>(t);
        s[static_cast<std::size_t>(t)] = 0.5 + 0.22 * std::sin(kTau * x / 700.0 + p1) +
                                         0.14 * std::sin(kTau * x / 173.0 + p2) +
                                         0.09 * std::sin(kTau * x / 41.0 + p3);
    }
    return s;
}

double lagged(const std::vector<double>& s, std::int64_t t, std::int64_t lag) {
    return s[static_cast<std::size_t>(t >= lag ? t - lag : 0)];
}

}  // namespace

void SynthConfig::validate() const {
    if (n_healthy < 0 || n_faulted < 0) throw ConfigError("synth: cycle counts must be >= 0");
    if (cycle_length < 1) throw ConfigError("synth: cycle length must be >= 1");
    if (feature_count < kFirstSensor)
        throw ConfigError("synth: feature count must be >= " + std::to_string(kFirstSensor) +
                          " (the named channels)");
    if (!(sag_depth >= 0.0 && sag_depth < 1.0)) throw ConfigError("synth: sag depth must be in [0, 1)");
    if (!(sag_duty >= 0.0 && sag_duty <= 0.8)) throw ConfigError("synth: sag duty must be in [0, 0.8]");
    if (!(coupling_perturbation >= 0.0 && coupling_perturbation <= 1.0))
        throw ConfigError("synth: coupling perturbation must be in [0, 1]");
}

std::vector<std::string> synth_feature_names(int feature_count) {
    std::vector<std::string> names = {"vehicle_speed", "engine_rpm",  "battery_voltage", "battery_current",
                                      "battery_soc",   "battery_temp", "prndl_state",     "brake_status"};
    for (int f = kFirstSensor; f < feature_count; ++f) {
        const std::string n = std::to_string(f);
        names.push_back("sensor_" + std::string(n.size() < 2 ? "0" : "") + n);
    }
    return names;
}

std::vector<double> synth_feature_maxima(int feature_count) {
    std::vector<double> maxima = {120.0, 6000.0, 400.0, 200.0, 100.0, 60.0, 4.0, 1.0};
    maxima.resize(static_cast<std::size_t>(feature_count), 10.0);
    return maxima;
}

const std::vector<int>& designated_sag_channels() {
    static const std::vector<int> channels = {kVoltage, kSoc, kTemp};
    return channels;
}

int coupling_channel() { return kCurrent; }

Tensor healthy_matrix(const SynthConfig& config, std::uint64_t cycle_seed) {
    config.validate();
    const std::int64_t T = config.cycle_length;
    const int F = config.feature_count;
    const std::vector<double> maxima = synth_feature_maxima(F);
    std::mt19937_64 rng = make_rng(cycle_seed);
    Tensor m(Shape{T, F});

    const std::vector<double> s = intensity_series(T, rng);

    // Values are composed in normalized units and scaled up by the channel
    // maximum, so normalizing by the published maxima recovers them. The
    // designated sag channels are built to stay in [0.85, 0.99] normalized.
    for (std::int64_t t = 0; t < T; ++t)
        m.at(t, kSpeed) = maxima[kSpeed] * (0.9 * s[static_cast<std::size_t>(t)] + 0.01 * noise(rng));

    for (std::int64_t t = 0; t < T; ++t)
        m.at(t, kRpm) = maxima[kRpm] * (0.12 + 0.72 * lagged(s, t, 15) + 0.01 * noise(rng));

    {
        const double base = uniform(rng, 0.87, 0.97);
        const double phase = uniform(rng, 0.0, kTau);
        for (std::int64_t t = 0; t < T; ++t)
            m.at(t, kVoltage) = maxima[kVoltage] * (base + 0.015 * std::sin(kTau * static_cast<double>(t) / 913.0 + phase) +
                                                    0.005 * noise(rng));
    }

    {
        const double phase = uniform(rng, 0.0, kTau);
        for (std::int64_t t = 0; t < T; ++t)
            m.at(t, kCurrent) =
                maxima[kCurrent] * (0.5 + 0.60 * (lagged(s, t, 5) - 0.5) +
                                    0.05 * std::sin(kTau * static_cast<double>(t) / 210.0 + phase) +
                                    0.01 * noise(rng));
    }

    {
        const double base = uniform(rng, 0.90, 0.98);
        for (std::int64_t t = 0; t < T; ++t)
            m.at(t, kSoc) = maxima[kSoc] * (base - 0.04 * static_cast<double>(t) / static_cast<double>(T) +
                                            0.004 * noise(rng));
    }

    {
        const double base = uniform(rng, 0.86, 0.95);
        for (std::int64_t t = 0; t < T; ++t)
            m.at(t, kTemp) = maxima[kTemp] * (base + 0.02 * static_cast<double>(t) / static_cast<double>(T) +
                                              0.004 * noise(rng));
    }

    {
        // Gear selector: piecewise constant, mostly drive.
        std::uniform_int_distribution<std::int64_t> seg_len(120, 600);
        std::uniform_real_distribution<double> pick(0.0, 1.0);
        std::int64_t t = 0;
        while (t < T) {
            const std::int64_t len = seg_len(rng);
            const double u = pick(rng);
            const double state = u < 0.05 ? 0.0 : u < 0.10 ? 1.0 : u < 0.15 ? 2.0 : u < 0.90 ? 3.0 : 4.0;
            for (std::int64_t i = t; i < std::min(T, t + len); ++i) m.at(i, kPrndl) = state;
            t += len;
        }
    }

    // Brake tracks low drive intensity; no rng draws, fully determined by s.
    for (std::int64_t t = 0; t < T; ++t) m.at(t, kBrake) = lagged(s, t, 2) < 0.33 ? 1.0 : 0.0;

    for (int f = kFirstSensor; f < F; ++f) {
        const double pa = uniform(rng, 80.0, 900.0);
        const double pb = uniform(rng, 30.0, 300.0);
        const double phase_a = uniform(rng, 0.0, kTau);
        const double phase_b = uniform(rng, 0.0, kTau);
        const double amp_a = uniform(rng, 0.10, 0.20);
        const double amp_b = uniform(rng, 0.05, 0.10);
        for (std::int64_t t = 0; t < T; ++t) {
            const double x = static_cast<double>(t);
            m.at(t, f) = maxima[static_cast<std::size_t>(f)] *
                         (0.5 + amp_a * std::sin(kTau * x / pa + phase_a) +
                          amp_b * std::sin(kTau * x / pb + phase_b) +
                          0.12 * (s[static_cast<std::size_t>(t)] - 0.5) + 0.01 * noise(rng));
        }
    }
    return m;
}

void apply_fault(Tensor& matrix, const SynthConfig& config, std::uint64_t fault_seed) {
    config.validate();
    if (matrix.rank() != 2) throw DimensionError("apply_fault: matrix must be rank 2, got " + matrix.shape().str());
    const std::int64_t T = matrix.dim(0);
    if (matrix.dim(1) != config.feature_count)
        throw DimensionError("apply_fault: matrix has " + std::to_string(matrix.dim(1)) +
                             " features, config says " + std::to_string(config.feature_count));
    std::mt19937_64 rng = make_rng(fault_seed);

    // Burst schedule: random burst starts until the overshoot target
    // ceil(1.25 * duty * T) distinct steps are covered.
    const std::int64_t target = static_cast<std::int64_t>(std::ceil(1.25 * config.sag_duty * static_cast<double>(T)));
    std::vector<char> marked(static_cast<std::size_t>(T), 0);
    if (target > 0 && config.sag_depth > 0.0) {
        const std::int64_t burst = std::max<std::int64_t>(1, T / 40);
        std::uniform_int_distribution<std::int64_t> start_dist(0, T - 1);
        std::int64_t covered = 0;
        while (covered < target) {
            const std::int64_t start = start_dist(rng);
            for (std::int64_t t = start; t < std::min(T, start + burst); ++t) {
                if (!marked[static_cast<std::size_t>(t)]) {
                    marked[static_cast<std::size_t>(t)] = 1;
                    ++covered;
                }
            }
        }
        for (const int ch : designated_sag_channels())
            for (std::int64_t t = 0; t < T; ++t)
                if (marked[static_cast<std::size_t>(t)]) matrix.at(t, ch) *= 1.0 - config.sag_depth;
    }

    // Weakened coupling: pull the current channel toward its mean and
    // backfill with incoherent noise of a similar scale.
    const double p = config.coupling_perturbation;
    if (p > 0.0) {
        const int ch = coupling_channel();
        const double max_c = synth_feature_maxima(config.feature_count)[static_cast<std::size_t>(ch)];
        double mean = 0;
        for (std::int64_t t = 0; t < T; ++t) mean += matrix.at(t, ch);
        mean /= static_cast<double>(T);
        for (std::int64_t t = 0; t < T; ++t) {
            double& v = matrix.at(t, ch);
            v = mean + (1.0 - p) * (v - mean) + p * 0.15 * max_c * noise(rng);
        }
    }
}

std::uint64_t synth_cycle_seed(const SynthConfig& config, int index) {
    return derive_seed(config.seed, static_cast<std::uint64_t>(index));
}

std::uint64_t synth_fault_seed(std::uint64_t cycle_seed) { return derive_seed(cycle_seed, 1); }

std::vector<DriveCycle> generate_synthetic(const SynthConfig& config, int threads) {
    config.validate();
    const int n = config.n_healthy + config.n_faulted;
    const std::vector<std::string> names = synth_feature_names(config.feature_count);
    const std::vector<double> maxima = synth_feature_maxima(config.feature_count);
    std::vector<DriveCycle> cycles(static_cast<std::size_t>(n));

    auto generate_one = [&](int i) {
        const bool faulted = i >= config.n_healthy;
        const std::uint64_t seed = synth_cycle_seed(config, i);
        DriveCycle& c = cycles[static_cast<std::size_t>(i)];
        const int serial = faulted ? i - config.n_healthy : i;
        const std::string num = std::to_string(serial);
        c.id = std::string(faulted ? "faulted-" : "healthy-") + std::string(3 - std::min<std::size_t>(3, num.size()), '0') + num;
        c.label = faulted ? Label::kFaulted : Label::kHealthy;
        c.matrix = healthy_matrix(config, seed);
        if (faulted) apply_fault(c.matrix, config, synth_fault_seed(seed));
        c.feature_names = names;
        c.feature_maxima = maxima;
        c.normalized = false;
    };

    const int workers = std::max(1, std::min(threads, n));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) generate_one(i);
    } else {
        // Per-cycle child seeds make the work order irrelevant to the output.
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (int i = w; i < n; i += workers) generate_one(i);
            });
        for (std::thread& t : pool) t.join();
    }
    return cycles;
}

}  // namespace cycleguard
