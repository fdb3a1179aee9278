#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cycleguard/cycle.hpp"
#include "cycleguard/synth.hpp"

namespace cycleguard {

// A labeled collection of raw cycles plus the shared feature schema. On disk
// this is a directory: manifest.json, maxima.json, and one CSV per cycle.
struct Dataset {
    std::vector<DriveCycle> cycles;
    std::vector<std::string> feature_names;
    std::vector<double> maxima;
};

// Reads one cycle CSV and checks its header against the schema. The
// returned cycle is raw; normalization is a separate, explicit step.
DriveCycle ingest_csv(const std::string& path, const std::vector<std::string>& schema,
                      const std::vector<double>& maxima);

void save_dataset(const Dataset& dataset, const std::string& dir, const SynthConfig* provenance = nullptr);
Dataset load_dataset(const std::string& dir);

// Healthy cycles shuffled by seed and split train/validation; every faulted
// cycle goes to test. Indices refer into dataset.cycles.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

SplitIndices split_dataset(const Dataset& dataset, double validation_fraction, std::uint64_t seed);

}  // namespace cycleguard
