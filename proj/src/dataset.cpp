#include "cycleguard/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cycleguard/csv.hpp"
#include "cycleguard/error.hpp"
#include "cycleguard/rng.hpp"

namespace cycleguard {

namespace fs = std::filesystem;
using json = nlohmann::json;

DriveCycle ingest_csv(const std::string& path, const std::vector<std::string>& schema,
                      const std::vector<double>& maxima) {
    if (schema.size() != maxima.size())
        throw ConfigError("ingest: schema lists " + std::to_string(schema.size()) + " features but " +
                          std::to_string(maxima.size()) + " maxima given");
    const CsvTable table = read_numeric_csv(path);
    if (table.header != schema) {
        std::string missing;
        for (const std::string& name : schema)
            if (std::find(table.header.begin(), table.header.end(), name) == table.header.end()) {
                missing = name;
                break;
            }
        throw DataError("ingest '" + path + "': header does not match the schema" +
                        (missing.empty() ? " (column order differs)" : ", missing column '" + missing + "'"));
    }
    if (table.rows.empty()) throw DataError("ingest '" + path + "': no data rows");

    DriveCycle c;
    c.id = fs::path(path).stem().string();
    const std::int64_t T = static_cast<std::int64_t>(table.rows.size());
    const std::int64_t F = static_cast<std::int64_t>(schema.size());
    c.matrix = Tensor(Shape{T, F});
    for (std::int64_t t = 0; t < T; ++t)
        for (std::int64_t f = 0; f < F; ++f)
            c.matrix.at(t, f) = table.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(f)];
    c.feature_names = schema;
    c.feature_maxima = maxima;
    c.normalized = false;
    return c;
}

void save_dataset(const Dataset& dataset, const std::string& dir, const SynthConfig* provenance) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "cycles", ec);
    if (ec) throw IoError("dataset '" + dir + "': cannot create directory: " + ec.message());

    json maxima = json::object();
    for (std::size_t f = 0; f < dataset.feature_names.size(); ++f)
        maxima[dataset.feature_names[f]] = dataset.maxima[f];
    {
        std::ofstream out(fs::path(dir) / "maxima.json", std::ios::trunc);
        if (!out) throw IoError("dataset '" + dir + "': cannot write maxima.json");
        out << maxima.dump(2) << '\n';
    }

    json manifest;
    manifest["feature_names"] = dataset.feature_names;
    json rows = json::array();
    for (const DriveCycle& c : dataset.cycles) {
        json row;
        row["id"] = c.id;
        row["label"] = label_name(c.label);
        row["file"] = "cycles/" + c.id + ".csv";
        rows.push_back(row);
        write_numeric_csv((fs::path(dir) / "cycles" / (c.id + ".csv")).string(), dataset.feature_names,
                          c.matrix);
    }
    manifest["cycles"] = rows;
    if (provenance) {
        json p;
        p["seed"] = provenance->seed;
        p["n_healthy"] = provenance->n_healthy;
        p["n_faulted"] = provenance->n_faulted;
        p["cycle_length"] = provenance->cycle_length;
        p["feature_count"] = provenance->feature_count;
        p["sag_depth"] = provenance->sag_depth;
        p["sag_duty"] = provenance->sag_duty;
        p["coupling_perturbation"] = provenance->coupling_perturbation;
        manifest["generator"] = p;
    }
    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("dataset '" + dir + "': cannot write manifest.json");
    out << manifest.dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("dataset '" + dir + "': manifest write failed");
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream mf(root / "manifest.json");
    if (!mf) throw IoError("dataset '" + dir + "': cannot open manifest.json");
    json manifest;
    try {
        mf >> manifest;
    } catch (const json::exception& e) {
        throw DataError("dataset '" + dir + "': manifest.json is not valid: " + e.what());
    }
    std::ifstream xf(root / "maxima.json");
    if (!xf) throw IoError("dataset '" + dir + "': cannot open maxima.json");
    json maxima_doc;
    try {
        xf >> maxima_doc;
    } catch (const json::exception& e) {
        throw DataError("dataset '" + dir + "': maxima.json is not valid: " + e.what());
    }

    Dataset d;
    if (!manifest.contains("feature_names") || !manifest["feature_names"].is_array())
        throw DataError("dataset '" + dir + "': manifest lacks feature_names");
    for (const json& n : manifest["feature_names"]) d.feature_names.push_back(n.get<std::string>());
    for (const std::string& name : d.feature_names) {
        if (!maxima_doc.contains(name))
            throw DataError("dataset '" + dir + "': maxima.json lacks feature '" + name + "'");
        d.maxima.push_back(maxima_doc[name].get<double>());
    }

    if (!manifest.contains("cycles") || !manifest["cycles"].is_array())
        throw DataError("dataset '" + dir + "': manifest lacks the cycle list");
    for (const json& row : manifest["cycles"]) {
        const std::string file = row.at("file").get<std::string>();
        DriveCycle c = ingest_csv((root / file).string(), d.feature_names, d.maxima);
        c.id = row.at("id").get<std::string>();
        c.label = parse_label(row.at("label").get<std::string>());
        d.cycles.push_back(std::move(c));
    }
    return d;
}

SplitIndices split_dataset(const Dataset& dataset, double validation_fraction, std::uint64_t seed) {
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
        throw ConfigError("split: validation fraction must be in [0, 1)");
    std::vector<std::size_t> healthy;
    SplitIndices s;
    for (std::size_t i = 0; i < dataset.cycles.size(); ++i) {
        if (dataset.cycles[i].label == Label::kHealthy)
            healthy.push_back(i);
        else
            s.test.push_back(i);
    }
    std::mt19937_64 rng = make_rng(derive_seed(seed, 0x5eed));
    std::shuffle(healthy.begin(), healthy.end(), rng);
    const std::size_t n_val = static_cast<std::size_t>(
        std::llround(validation_fraction * static_cast<double>(healthy.size())));
    for (std::size_t i = 0; i < healthy.size(); ++i)
        (i < healthy.size() - n_val ? s.train : s.validation).push_back(healthy[i]);
    return s;
}

}  // namespace cycleguard
