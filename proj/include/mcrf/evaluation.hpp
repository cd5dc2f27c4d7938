#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "mcrf/engine.hpp"
#include "mcrf/errors.hpp"
#include "mcrf/grid.hpp"

namespace mcrf {

// Per-cell class frequencies across an ensemble.
struct OccurrenceProbabilityMap {
    GridSpec spec;
    int n_realizations = 0;
    std::vector<double> probs;  // [cell][class-1]

    double at(int x, int y, int label) const {
        return probs[(static_cast<std::size_t>(y) * spec.width + x) *
                         spec.n_classes +
                     (label - 1)];
    }
};

inline OccurrenceProbabilityMap occurrence_probabilities(
    const RealizationEnsemble& ensemble) {
    if (ensemble.realizations.empty())
        throw DataError("ensemble has no realizations");
    const GridSpec spec = ensemble.spec;
    spec.validate();
    OccurrenceProbabilityMap map;
    map.spec = spec;
    map.n_realizations = static_cast<int>(ensemble.realizations.size());
    map.probs.assign(
        static_cast<std::size_t>(spec.cell_count()) * spec.n_classes, 0.0);
    for (const auto& grid : ensemble.realizations) {
        if (grid.spec() != spec)
            throw DataError("realization does not match the ensemble spec");
        for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
            const int label = grid.cells[cell];
            if (label < 1)
                throw DataError("realization contains unsimulated cells");
            map.probs[cell * spec.n_classes + (label - 1)] += 1.0;
        }
    }
    for (double& p : map.probs) p /= map.n_realizations;
    return map;
}

// Most probable class per cell; ties break to the smallest class, so the
// map is a pure function of the ensemble.
inline CategoricalGrid optimal_map(const OccurrenceProbabilityMap& map) {
    CategoricalGrid grid = CategoricalGrid::filled(map.spec, 0);
    for (long long cell = 0; cell < map.spec.cell_count(); ++cell) {
        int best = 1;
        double best_p = map.probs[cell * map.spec.n_classes];
        for (int c = 2; c <= map.spec.n_classes; ++c) {
            const double p = map.probs[cell * map.spec.n_classes + (c - 1)];
            if (p > best_p) {
                best = c;
                best_p = p;
            }
        }
        grid.cells[cell] = best;
    }
    return grid;
}

// Percent of correctly classified cells. Conditioning cells are excluded
// unless include_samples is set; they are fixed by construction and would
// inflate the score.
inline double accuracy(const CategoricalGrid& predicted,
                       const CategoricalGrid& reference,
                       const SampleSet& samples, bool include_samples = false) {
    if (predicted.spec() != reference.spec())
        throw DataError("predicted and reference grids differ in shape");
    predicted.validate();
    reference.validate();
    samples.validate();
    std::vector<bool> sampled(reference.cells.size(), false);
    for (const auto& p : samples.points) {
        if (!reference.in_bounds(p.x, p.y))
            throw DataError("sample outside the grid");
        sampled[static_cast<std::size_t>(p.y) * reference.width + p.x] = true;
    }
    long long scored = 0, correct = 0;
    for (std::size_t cell = 0; cell < reference.cells.size(); ++cell) {
        if (!include_samples && sampled[cell]) continue;
        if (reference.cells[cell] == 0)
            throw DataError("reference grid has no-data cells");
        if (predicted.cells[cell] == 0)
            throw DataError("predicted grid has no-data cells");
        ++scored;
        if (predicted.cells[cell] == reference.cells[cell]) ++correct;
    }
    if (scored == 0) throw DataError("no cells left to score");
    return 100.0 * static_cast<double>(correct) / static_cast<double>(scored);
}

struct AccuracyReport {
    std::vector<double> realization_accuracy;  // percent, per realization
    double mean_realization_accuracy = 0.0;
    double optimal_accuracy = 0.0;
    std::vector<std::uint64_t> confusion;      // [reference-1][predicted-1]
};

inline AccuracyReport ensemble_accuracy(const RealizationEnsemble& ensemble,
                                        const CategoricalGrid& reference,
                                        const SampleSet& samples,
                                        bool include_samples = false) {
    AccuracyReport report;
    for (const auto& grid : ensemble.realizations)
        report.realization_accuracy.push_back(
            accuracy(grid, reference, samples, include_samples));
    for (double a : report.realization_accuracy)
        report.mean_realization_accuracy += a;
    report.mean_realization_accuracy /=
        static_cast<double>(report.realization_accuracy.size());

    const auto probs = occurrence_probabilities(ensemble);
    const auto best = optimal_map(probs);
    report.optimal_accuracy = accuracy(best, reference, samples, include_samples);

    const int n = reference.n_classes;
    report.confusion.assign(static_cast<std::size_t>(n) * n, 0);
    std::vector<bool> sampled(reference.cells.size(), false);
    for (const auto& p : samples.points)
        sampled[static_cast<std::size_t>(p.y) * reference.width + p.x] = true;
    for (std::size_t cell = 0; cell < reference.cells.size(); ++cell) {
        if (!include_samples && sampled[cell]) continue;
        report.confusion[static_cast<std::size_t>(reference.cells[cell] - 1) * n +
                         (best.cells[cell] - 1)]++;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Neighborhood sweep: one ensemble per (sample count, search config) over a
// single reference, with the transiogram model fitted once from the densest
// sample set. Sample sets are drawn per count, not per config, so configs
// compete on identical data.
// ---------------------------------------------------------------------------

struct SweepSettings {
    std::vector<int> sample_counts;            // strictly decreasing
    std::vector<NeighborhoodConfig> configs;
    CpdForm cpd_form = CpdForm::TransitionPrior;
    int realizations = 1;
    std::uint64_t seed = 0;
    LagBinning binning;
    int jobs = 1;

    void validate() const {
        if (sample_counts.empty()) throw DataError("sweep needs sample counts");
        for (std::size_t i = 1; i < sample_counts.size(); ++i)
            if (sample_counts[i] >= sample_counts[i - 1])
                throw DataError("sample counts must decrease strictly");
        if (sample_counts.back() < 2)
            throw DataError("sample counts must be at least 2");
        if (configs.empty()) throw DataError("sweep needs neighborhood configs");
        for (const auto& c : configs) c.validate();
        if (realizations < 1) throw DataError("need at least one realization");
        binning.validate();
    }
};

struct SweepRow {
    std::string neighborhood;
    int samples = 0;
    double mean_realization_acc = 0.0;
    double optimal_acc = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
};

// Seed derivation: sample set i uses stream 1+i, the ensemble for (count
// i, config j) stream 64 + i*n_configs + j. Both feed through the stream
// splitter, so one master seed reproduces the whole sweep.
inline SweepResult run_sweep(const CategoricalGrid& reference,
                             const SweepSettings& settings,
                             const TransiogramModel* model_override = nullptr) {
    settings.validate();
    reference.validate();
    for (int cell : reference.cells)
        if (cell == 0) throw DataError("sweep reference has no-data cells");

    std::vector<SampleSet> sample_sets;
    for (std::size_t i = 0; i < settings.sample_counts.size(); ++i) {
        const std::uint64_t sample_seed = Rng(settings.seed, 1 + i).next();
        sample_sets.push_back(
            random_sample(reference, settings.sample_counts[i], sample_seed));
    }

    TransiogramModel fitted;
    if (!model_override) {
        const auto experimental =
            estimate_experimental(sample_sets[0], settings.binning);
        fitted = fit_linear(experimental, class_proportions(sample_sets[0]));
    }
    const TransiogramModel& model = model_override ? *model_override : fitted;

    SweepResult result;
    for (std::size_t i = 0; i < settings.sample_counts.size(); ++i) {
        for (std::size_t j = 0; j < settings.configs.size(); ++j) {
            SimulationConfig config{settings.configs[j], settings.cpd_form,
                                    settings.realizations,
                                    Rng(settings.seed,
                                        64 + i * settings.configs.size() + j)
                                        .next()};
            const auto ensemble = simulate_ensemble(
                reference.spec(), sample_sets[i], model, config, settings.jobs);
            const auto report =
                ensemble_accuracy(ensemble, reference, sample_sets[i]);
            result.rows.push_back({settings.configs[j].describe(),
                                   settings.sample_counts[i],
                                   report.mean_realization_accuracy,
                                   report.optimal_accuracy});
        }
    }
    return result;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "neighborhood,samples,mean_realization_acc,optimal_acc\n";
    char buf[64];
    for (const auto& row : result.rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%.2f,%.2f",
                      row.neighborhood.c_str(), row.samples,
                      row.mean_realization_acc, row.optimal_acc);
        out << buf << '\n';
    }
}

// Sweep config file: one key=value per line, '#' comments. Keys: reference,
// counts, configs, radius, realizations, seed, cpd_form, bin_width,
// tolerance, max_lag. The last four are optional.
struct SweepFile {
    std::string reference_path;
    SweepSettings settings;
};

inline SweepFile parse_sweep_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (detail::get_line(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("sweep config line is not key=value: " + line);
        const std::string key = line.substr(0, eq);
        if (kv.count(key)) throw DataError("duplicate sweep config key: " + key);
        kv[key] = line.substr(eq + 1);
    }
    for (const auto& [key, value] : kv) {
        static const std::set<std::string> known{
            "reference", "counts",  "configs",   "radius",  "realizations",
            "seed",      "cpd_form", "bin_width", "tolerance", "max_lag"};
        if (!known.count(key))
            throw DataError("unknown sweep config key: " + key);
    }
    for (const char* required : {"reference", "counts", "configs", "radius",
                                 "realizations"})
        if (!kv.count(required))
            throw DataError(std::string("sweep config missing key: ") + required);

    SweepFile file;
    file.reference_path = kv["reference"];
    const double radius = detail::parse_double(kv["radius"], "radius");
    for (auto token : detail::split_char(kv["counts"], ','))
        file.settings.sample_counts.push_back(
            detail::parse_int(token, "sample count"));
    for (auto token : detail::split_char(kv["configs"], ','))
        file.settings.configs.push_back(
            NeighborhoodConfig::parse(std::string(token), radius));
    file.settings.realizations =
        detail::parse_int(kv["realizations"], "realizations");
    if (kv.count("seed")) {
        const long long seed = detail::parse_int(kv["seed"], "seed");
        if (seed < 0) throw DataError("seed must be non-negative");
        file.settings.seed = static_cast<std::uint64_t>(seed);
    }
    if (kv.count("cpd_form"))
        file.settings.cpd_form = parse_cpd_form(kv["cpd_form"]);
    file.settings.binning.bin_width =
        kv.count("bin_width") ? detail::parse_double(kv["bin_width"], "bin_width")
                              : 2.0;
    file.settings.binning.tolerance =
        kv.count("tolerance") ? detail::parse_double(kv["tolerance"], "tolerance")
                              : 1.0;
    file.settings.binning.max_lag =
        kv.count("max_lag") ? detail::parse_double(kv["max_lag"], "max_lag")
                            : radius;
    file.settings.validate();
    return file;
}

// ---------------------------------------------------------------------------
// PPM rendering: P6 with a fixed 16-color palette; label 0 paints black.
// ---------------------------------------------------------------------------

inline const unsigned char* palette_color(int label) {
    static constexpr unsigned char kPalette[17][3] = {
        {0, 0, 0},       {31, 119, 180},  {255, 127, 14},  {44, 160, 44},
        {214, 39, 40},   {148, 103, 189}, {140, 86, 75},   {227, 119, 194},
        {127, 127, 127}, {188, 189, 34},  {23, 190, 207},  {174, 199, 232},
        {255, 187, 120}, {152, 223, 138}, {255, 152, 150}, {197, 176, 213},
        {196, 156, 148},
    };
    return kPalette[label];
}

inline void write_ppm(std::ostream& out, const CategoricalGrid& grid) {
    grid.validate();
    if (grid.n_classes > 16)
        throw DataError("palette covers at most 16 classes");
    out << "P6\n" << grid.width << ' ' << grid.height << "\n255\n";
    std::vector<char> row(static_cast<std::size_t>(grid.width) * 3);
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const unsigned char* rgb = palette_color(grid.at(x, y));
            row[3 * x + 0] = static_cast<char>(rgb[0]);
            row[3 * x + 1] = static_cast<char>(rgb[1]);
            row[3 * x + 2] = static_cast<char>(rgb[2]);
        }
        out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
}

inline void render_map(const CategoricalGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path);
    write_ppm(out, grid);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace mcrf
