#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cycleguard/cycle.hpp"
#include "cycleguard/tensor.hpp"

namespace cycleguard {

// Seeded synthetic drive-cycle generator. Healthy cycles are band-limited
// sinusoid mixtures around a shared latent drive-intensity signal, plus
// piecewise-constant discrete channels and fixed cross-channel couplings.
// Faulted cycles take a healthy cycle and apply an intermittent multiplicative
// sag to the designated battery channels plus a weakened current coupling.
struct SynthConfig {
    std::uint64_t seed = 0;
    int n_healthy = 0;
    int n_faulted = 0;
    std::int64_t cycle_length = 2000;
    int feature_count = 58;
    // Fault profile. Sag multiplies designated channels by (1 - depth) on
    // scheduled burst steps covering at least 1.25 * duty * T steps; the
    // overshoot plus the channels' guaranteed near-max baseline keeps the
    // normalized mean absolute deviation >= depth * duty.
    double sag_depth = 0.25;
    double sag_duty = 0.08;
    double coupling_perturbation = 0.5;

    void validate() const;
};

std::vector<std::string> synth_feature_names(int feature_count);
std::vector<double> synth_feature_maxima(int feature_count);

// Channel indices the fault profile touches.
const std::vector<int>& designated_sag_channels();
int coupling_channel();

// Raw (unnormalized) healthy matrix for one cycle seed. Exposed so tests can
// rebuild the healthy twin of a faulted cycle and measure the fault directly.
Tensor healthy_matrix(const SynthConfig& config, std::uint64_t cycle_seed);

// Applies the fault profile in place. Deterministic in fault_seed.
void apply_fault(Tensor& matrix, const SynthConfig& config, std::uint64_t fault_seed);

// Seed for cycle `index` (healthy first, then faulted), and the fault stream
// seed derived from it. generate_synthetic uses exactly these, so twins are
// reconstructible from the manifest.
std::uint64_t synth_cycle_seed(const SynthConfig& config, int index);
std::uint64_t synth_fault_seed(std::uint64_t cycle_seed);

// All cycles, healthy then faulted, raw values with maxima attached.
// Bitwise identical for a fixed config regardless of thread count.
std::vector<DriveCycle> generate_synthetic(const SynthConfig& config, int threads = 1);

}  // namespace cycleguard
