// Command-line front end: synthesize reference maps, draw samples, fit
// transiogram models, simulate ensembles, score them, sweep neighborhood
// configurations, and render grids to PPM.
//
// Exit codes: 0 success, 1 usage, 2 malformed or inconsistent data, 3 I/O.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcrf/mcrf.hpp"

namespace fs = std::filesystem;

namespace {

std::string u64str(std::uint64_t v) {
    return std::to_string(static_cast<unsigned long long>(v));
}

// Flag values checked at parse time so malformed ones count as usage
// errors, same as a missing required flag.
std::string check_neighborhood(const std::string& text) {
    try {
        mcrf::NeighborhoodConfig::parse(text, 1.0);
        return {};
    } catch (const mcrf::DataError& e) {
        return e.what();
    }
}

std::string check_cpd_form(const std::string& text) {
    try {
        mcrf::parse_cpd_form(text);
        return {};
    } catch (const mcrf::DataError& e) {
        return e.what();
    }
}

struct SynthArgs {
    int width = 0, height = 0, classes = 0;
    double blob_scale = 8.0;
    std::uint64_t seed = 0;
    std::string out;
};

int run_synth(const SynthArgs& a) {
    std::fprintf(stderr,
                 "# synth width=%d height=%d classes=%d blob-scale=%g seed=%s"
                 " out=%s\n",
                 a.width, a.height, a.classes, a.blob_scale,
                 u64str(a.seed).c_str(), a.out.c_str());
    const auto grid =
        mcrf::synth_reference(a.width, a.height, a.classes, a.blob_scale, a.seed);
    mcrf::save_grid(grid, a.out);
    return 0;
}

struct SampleArgs {
    std::string grid, out;
    int count = 0;
    std::uint64_t seed = 0;
};

int run_sample(const SampleArgs& a) {
    std::fprintf(stderr, "# sample grid=%s count=%d seed=%s out=%s\n",
                 a.grid.c_str(), a.count, u64str(a.seed).c_str(), a.out.c_str());
    const auto grid = mcrf::load_grid(a.grid);
    const auto samples = mcrf::random_sample(grid, a.count, a.seed);
    mcrf::save_samples(samples, a.out);
    return 0;
}

struct TransiogramArgs {
    std::string samples, out;
    double max_lag = 0.0, bin_width = 0.0, tolerance = 0.0;
    int classes = 0;
};

int run_transiogram(const TransiogramArgs& a) {
    std::fprintf(stderr,
                 "# transiogram samples=%s max-lag=%g bin-width=%g tolerance=%g"
                 " classes=%d out=%s\n",
                 a.samples.c_str(), a.max_lag, a.bin_width, a.tolerance,
                 a.classes, a.out.c_str());
    const auto samples = mcrf::load_samples(a.samples, a.classes);
    const mcrf::LagBinning binning{a.max_lag, a.bin_width, a.tolerance};
    const auto experimental = mcrf::estimate_experimental(samples, binning);
    const auto model =
        mcrf::fit_linear(experimental, mcrf::class_proportions(samples));
    mcrf::save_model(model, a.out);
    return 0;
}

struct SimulateArgs {
    std::string samples, model, neighborhood = "sectored:4";
    std::string cpd_form = "marginal", out_dir;
    int width = 0, height = 0, realizations = 1, jobs = 1;
    double radius = 0.0;
    std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
    std::fprintf(stderr,
                 "# simulate samples=%s model=%s width=%d height=%d"
                 " neighborhood=%s radius=%g cpd-form=%s realizations=%d"
                 " seed=%s jobs=%d out-dir=%s\n",
                 a.samples.c_str(), a.model.c_str(), a.width, a.height,
                 a.neighborhood.c_str(), a.radius, a.cpd_form.c_str(),
                 a.realizations, u64str(a.seed).c_str(), a.jobs,
                 a.out_dir.c_str());
    const auto model = mcrf::load_model(a.model);
    const auto samples = mcrf::load_samples(a.samples, model.n_classes);
    const mcrf::GridSpec spec{a.width, a.height, model.n_classes};
    mcrf::SimulationConfig config{
        mcrf::NeighborhoodConfig::parse(a.neighborhood, a.radius),
        mcrf::parse_cpd_form(a.cpd_form), a.realizations, a.seed};

    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) throw mcrf::IoError("cannot create output directory: " + a.out_dir);

    const auto ensemble =
        mcrf::simulate_ensemble(spec, samples, model, config, a.jobs);
    for (std::size_t r = 0; r < ensemble.realizations.size(); ++r) {
        const fs::path path =
            fs::path(a.out_dir) / ("real_" + std::to_string(r) + ".grid");
        mcrf::save_grid(ensemble.realizations[r], path.string());
    }
    std::fprintf(stderr, "# stats empty_neighborhoods=%s degenerate_cpds=%s\n",
                 u64str(ensemble.stats.empty_neighborhoods).c_str(),
                 u64str(ensemble.stats.degenerate_cpds).c_str());
    return 0;
}

struct EvaluateArgs {
    std::string realizations, reference, samples, confusion;
    bool include_samples = false;
};

std::vector<mcrf::CategoricalGrid> load_realizations(const std::string& dir) {
    if (!fs::is_directory(dir))
        throw mcrf::IoError("not a directory: " + dir);
    std::vector<std::pair<long, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!name.starts_with("real_") || !name.ends_with(".grid")) continue;
        const std::string digits = name.substr(5, name.size() - 10);
        if (digits.empty() ||
            digits.find_first_not_of("0123456789") != std::string::npos)
            continue;
        found.emplace_back(std::stol(digits), entry.path());
    }
    if (found.empty())
        throw mcrf::DataError("no real_<index>.grid files in " + dir);
    std::sort(found.begin(), found.end());
    std::vector<mcrf::CategoricalGrid> grids;
    for (const auto& [index, path] : found)
        grids.push_back(mcrf::load_grid(path.string()));
    return grids;
}

int run_evaluate(const EvaluateArgs& a) {
    std::fprintf(stderr,
                 "# evaluate realizations=%s reference=%s samples=%s"
                 " include-samples=%d\n",
                 a.realizations.c_str(), a.reference.c_str(), a.samples.c_str(),
                 a.include_samples ? 1 : 0);
    const auto reference = mcrf::load_grid(a.reference);
    const auto samples = mcrf::load_samples(a.samples, reference.n_classes);

    mcrf::RealizationEnsemble ensemble;
    ensemble.realizations = load_realizations(a.realizations);
    ensemble.spec = ensemble.realizations[0].spec();
    if (ensemble.spec != reference.spec())
        throw mcrf::DataError("realizations do not match the reference grid");

    const auto report =
        mcrf::ensemble_accuracy(ensemble, reference, samples, a.include_samples);
    std::printf("metric,value\n");
    for (std::size_t r = 0; r < report.realization_accuracy.size(); ++r)
        std::printf("realization_%zu,%.2f\n", r, report.realization_accuracy[r]);
    std::printf("mean_realization_acc,%.2f\n", report.mean_realization_accuracy);
    std::printf("optimal_acc,%.2f\n", report.optimal_accuracy);

    if (!a.confusion.empty()) {
        std::ofstream out(a.confusion);
        if (!out) throw mcrf::IoError("cannot write " + a.confusion);
        const int n = reference.n_classes;
        out << "ref_class";
        for (int j = 1; j <= n; ++j) out << ",pred_" << j;
        out << '\n';
        for (int i = 1; i <= n; ++i) {
            out << i;
            for (int j = 1; j <= n; ++j)
                out << ',' << report.confusion[(i - 1) * n + (j - 1)];
            out << '\n';
        }
    }
    return 0;
}

struct SweepArgs {
    std::string config, out;
    int jobs = 1;
};

int run_sweep_cmd(const SweepArgs& a) {
    std::ifstream in(a.config);
    if (!in) throw mcrf::IoError("cannot open sweep config: " + a.config);
    auto file = mcrf::parse_sweep_config(in);
    file.settings.jobs = a.jobs;

    std::string configs;
    for (const auto& c : file.settings.configs) {
        if (!configs.empty()) configs += ',';
        configs += c.describe();
    }
    std::string counts;
    for (int c : file.settings.sample_counts) {
        if (!counts.empty()) counts += ',';
        counts += std::to_string(c);
    }
    std::fprintf(stderr,
                 "# sweep reference=%s counts=%s configs=%s radius=%g"
                 " realizations=%d seed=%s cpd_form=%s bin_width=%g tolerance=%g"
                 " max_lag=%g jobs=%d out=%s\n",
                 file.reference_path.c_str(), counts.c_str(), configs.c_str(),
                 file.settings.configs[0].radius, file.settings.realizations,
                 u64str(file.settings.seed).c_str(),
                 mcrf::describe(file.settings.cpd_form).c_str(),
                 file.settings.binning.bin_width, file.settings.binning.tolerance,
                 file.settings.binning.max_lag, a.jobs, a.out.c_str());

    const auto reference = mcrf::load_grid(file.reference_path);
    const auto result = mcrf::run_sweep(reference, file.settings);
    for (const auto& row : result.rows)
        std::fprintf(stderr, "# row neighborhood=%s samples=%d mean=%.2f"
                             " optimal=%.2f\n",
                     row.neighborhood.c_str(), row.samples,
                     row.mean_realization_acc, row.optimal_acc);

    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw mcrf::IoError("cannot write " + a.out);
    mcrf::write_sweep_csv(out, result);
    if (!out) throw mcrf::IoError("write failed: " + a.out);
    return 0;
}

struct RenderArgs {
    std::string grid, out;
};

int run_render(const RenderArgs& a) {
    std::fprintf(stderr, "# render grid=%s out=%s\n", a.grid.c_str(),
                 a.out.c_str());
    mcrf::render_map(mcrf::load_grid(a.grid), a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Markov chain random field simulation toolkit"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* synth_cmd =
        app.add_subcommand("synth", "Generate a synthetic reference map");
    synth_cmd->add_option("--width", synth.width)->required()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--height", synth.height)->required()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--classes", synth.classes)->required()
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--blob-scale", synth.blob_scale)
        ->check(CLI::PositiveNumber);
    synth_cmd->add_option("--seed", synth.seed);
    synth_cmd->add_option("--out", synth.out)->required();

    SampleArgs sample;
    auto* sample_cmd =
        app.add_subcommand("sample", "Draw random samples from a grid");
    sample_cmd->add_option("--grid", sample.grid)->required();
    sample_cmd->add_option("--count", sample.count)->required()
        ->check(CLI::PositiveNumber);
    sample_cmd->add_option("--seed", sample.seed);
    sample_cmd->add_option("--out", sample.out)->required();

    TransiogramArgs transio;
    auto* transio_cmd = app.add_subcommand(
        "transiogram", "Estimate transiograms and fit a model");
    transio_cmd->add_option("--samples", transio.samples)->required();
    transio_cmd->add_option("--max-lag", transio.max_lag)->required()
        ->check(CLI::PositiveNumber);
    transio_cmd->add_option("--bin-width", transio.bin_width)->required()
        ->check(CLI::PositiveNumber);
    transio_cmd->add_option("--tolerance", transio.tolerance)->required()
        ->check(CLI::NonNegativeNumber);
    transio_cmd->add_option("--classes", transio.classes)
        ->check(CLI::PositiveNumber);
    transio_cmd->add_option("--out", transio.out)->required();

    SimulateArgs simulate;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Simulate conditional realizations");
    simulate_cmd->add_option("--samples", simulate.samples)->required();
    simulate_cmd->add_option("--model", simulate.model)->required();
    simulate_cmd->add_option("--width", simulate.width)->required()
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--height", simulate.height)->required()
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--neighborhood", simulate.neighborhood)
        ->check(check_neighborhood);
    simulate_cmd->add_option("--radius", simulate.radius)->required()
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--cpd-form", simulate.cpd_form)
        ->check(check_cpd_form);
    simulate_cmd->add_option("--realizations", simulate.realizations)
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", simulate.seed);
    simulate_cmd->add_option("--jobs", simulate.jobs)
        ->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--out-dir", simulate.out_dir)->required();

    EvaluateArgs evaluate;
    auto* evaluate_cmd = app.add_subcommand(
        "evaluate", "Score realizations against a reference");
    evaluate_cmd->add_option("--realizations", evaluate.realizations)
        ->required();
    evaluate_cmd->add_option("--reference", evaluate.reference)->required();
    evaluate_cmd->add_option("--samples", evaluate.samples)->required();
    evaluate_cmd->add_flag("--include-samples", evaluate.include_samples);
    evaluate_cmd->add_option("--confusion", evaluate.confusion);

    SweepArgs sweep;
    auto* sweep_cmd = app.add_subcommand(
        "sweep", "Run a neighborhood-configuration accuracy sweep");
    sweep_cmd->add_option("--config", sweep.config)->required();
    sweep_cmd->add_option("--out", sweep.out)->required();
    sweep_cmd->add_option("--jobs", sweep.jobs)->check(CLI::PositiveNumber);

    RenderArgs render;
    auto* render_cmd = app.add_subcommand("render", "Render a grid to PPM");
    render_cmd->add_option("--grid", render.grid)->required();
    render_cmd->add_option("--out", render.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*synth_cmd) return run_synth(synth);
        if (*sample_cmd) return run_sample(sample);
        if (*transio_cmd) return run_transiogram(transio);
        if (*simulate_cmd) return run_simulate(simulate);
        if (*evaluate_cmd) return run_evaluate(evaluate);
        if (*sweep_cmd) return run_sweep_cmd(sweep);
        if (*render_cmd) return run_render(render);
    } catch (const mcrf::IoError& e) {
        std::fprintf(stderr, "mcrf: %s\n", e.what());
        return 3;
    } catch (const mcrf::DataError& e) {
        std::fprintf(stderr, "mcrf: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mcrf: %s\n", e.what());
        return 2;
    }
    return 1;
}
