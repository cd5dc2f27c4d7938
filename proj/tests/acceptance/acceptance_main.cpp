// Acceptance gate: one PASS/FAIL line per criterion, exit code = number of
// failures. Criteria run on a fixed 64x64 five-class synthetic map with
// sample counts 400/150, radius 20, 20 realizations per ensemble.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcrf/mcrf.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace mcrf;

namespace {

int failures = 0;

void report(int number, bool pass, const std::string& detail) {
    std::printf("%s  criterion %2d  %s\n", pass ? "PASS" : "FAIL", number,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

// ---------------------------------------------------------------------- //

void criterion_1_factorization() {
    Rng rng(0xC1);
    double worst = 0.0;
    int cases = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(6));
        auto model = gen::random_model(rng, n, 2 + static_cast<int>(rng.below(6)));
        const int m = 1 + static_cast<int>(rng.below(6));
        auto nbhd = gen::random_neighborhood(rng, n, m, 14.0);
        auto cpd = local_cpd_transition_prior(model, nbhd);
        auto expected = oracle::factorized_cpd(model, nbhd, 0);
        for (int c = 0; c < n; ++c)
            worst = std::max(worst, std::abs(cpd.probs[c] - expected[c]));
        ++cases;
    }
    report(1, worst <= 1e-12,
           fmt("local CPD vs factorized chain: %d cases, max dev %.2e"
               " (tol 1e-12)",
               cases, worst));
}

void criterion_2_detailed_balance() {
    Rng rng(0xC2);
    double worst = 0.0;
    int cases = 0, anchors = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(5));
        auto model = make_detailed_balance_model(gen::random_proportions(rng, n),
                                                 2.0 + 15.0 * rng.uniform());
        const int m = 1 + static_cast<int>(rng.below(6));
        auto nbhd = gen::random_neighborhood(rng, n, m, 14.0);
        auto marginal = local_cpd_marginal_prior(model, nbhd);
        for (int anchor = 0; anchor < m; ++anchor) {
            auto transition = local_cpd_transition_prior(model, nbhd, anchor);
            for (int c = 0; c < n; ++c)
                worst = std::max(worst,
                                 std::abs(transition.probs[c] - marginal.probs[c]));
            ++anchors;
        }
        ++cases;
    }
    report(2, worst <= 1e-12,
           fmt("transition and marginal forms under detailed balance: %d"
               " neighborhoods, %d anchor choices, max dev %.2e (tol 1e-12)",
               cases, anchors, worst));
}

void criterion_3_estimator() {
    Rng rng(0xC3);
    bool all_equal = true;
    int sets = 0;
    for (int trial = 0; trial < 50; ++trial) {
        SampleSet set;
        set.n_classes = 2 + static_cast<int>(rng.below(5));
        const int target = 10 + static_cast<int>(rng.below(191));
        std::set<std::pair<int, int>> used;
        while (static_cast<int>(set.points.size()) < target) {
            const int x = static_cast<int>(rng.below(96));
            const int y = static_cast<int>(rng.below(96));
            if (!used.insert({x, y}).second) continue;
            set.points.push_back(
                {x, y, 1 + static_cast<int>(rng.below(set.n_classes))});
        }
        const LagBinning binning{4.0 + static_cast<double>(rng.below(40)),
                                 0.5 + 0.5 * static_cast<double>(rng.below(6)),
                                 0.25 * static_cast<double>(rng.below(9))};
        const auto est = estimate_experimental(set, binning);
        const auto naive_counts = oracle::naive_transiogram_counts(set, binning);
        if (est.counts != naive_counts) all_equal = false;
        // probabilities recomputed from the naive counts, same normalization
        const int n = set.n_classes;
        for (int b = 0; b < binning.bin_count() && all_equal; ++b)
            for (int i = 1; i <= n && all_equal; ++i) {
                std::uint64_t row = 0;
                for (int k = 1; k <= n; ++k) row += naive_counts[est.slot(b, i, k)];
                for (int k = 1; k <= n; ++k) {
                    const double expected =
                        row == 0
                            ? std::numeric_limits<double>::quiet_NaN()
                            : static_cast<double>(naive_counts[est.slot(b, i, k)]) /
                                  static_cast<double>(row);
                    const double got = est.prob(b, i, k);
                    if (std::isnan(expected) != std::isnan(got)) all_equal = false;
                    else if (!std::isnan(expected) && expected != got)
                        all_equal = false;
                }
            }
        ++sets;
    }
    report(3, all_equal,
           fmt("experimental estimator vs naive double loop: %d sample sets,"
               " counts and probabilities %s",
               sets, all_equal ? "identical" : "DIFFER"));
}

void criterion_4_neighborhoods() {
    Rng rng(0xC4);
    bool ok = true;
    int scenes = 0, probes = 0;
    for (int scene = 0; scene < 200 && ok; ++scene) {
        const GridSpec spec{8 + static_cast<int>(rng.below(89)),
                            8 + static_cast<int>(rng.below(89)), 5};
        SampleSet set;
        set.n_classes = 5;
        const long long cap =
            std::min<long long>(400, spec.cell_count() / 2 + 1);
        const int target = 1 + static_cast<int>(rng.below(cap));
        std::set<std::pair<int, int>> used;
        while (static_cast<int>(set.points.size()) < target) {
            const int x = static_cast<int>(rng.below(spec.width));
            const int y = static_cast<int>(rng.below(spec.height));
            if (!used.insert({x, y}).second) continue;
            set.points.push_back({x, y, 1 + static_cast<int>(rng.below(5))});
        }
        const int bucket = 1 + static_cast<int>(rng.below(24));
        const auto index = build_index(set, spec, bucket);

        for (int probe = 0; probe < 5 && ok; ++probe) {
            const int cx = static_cast<int>(rng.below(spec.width));
            const int cy = static_cast<int>(rng.below(spec.height));
            const double radius = 1.0 + 39.0 * rng.uniform();
            const int k = 1 + static_cast<int>(rng.below(9));

            const auto got = index.find_non_sectored(cx, cy, k, radius);
            const auto want =
                oracle::naive_non_sectored(set.points, cx, cy, k, radius);
            if (got.size() != want.size()) ok = false;
            for (std::size_t i = 0; ok && i < want.size(); ++i)
                if (got.data[i].x != want[i].x || got.data[i].y != want[i].y ||
                    got.data[i].label != want[i].label)
                    ok = false;

            for (int sectors : {2, 4, 8}) {
                const auto gs = index.find_sectored(cx, cy, sectors, radius);
                const auto ws =
                    oracle::naive_sectored(set.points, cx, cy, sectors, radius);
                if (gs.size() != ws.size()) ok = false;
                std::set<std::pair<int, int>> got_cells, want_cells;
                std::set<int> got_sectors;
                for (const auto& d : gs.data) {
                    got_cells.insert({d.x, d.y});
                    if (!got_sectors.insert(d.sector).second) ok = false;
                }
                for (const auto& [d, s] : ws) want_cells.insert({d.x, d.y});
                if (got_cells != want_cells) ok = false;
                for (std::size_t i = 1; i < gs.size(); ++i)
                    if (gs.data[i - 1].lag > gs.data[i].lag) ok = false;
            }
            ++probes;
        }
        ++scenes;
    }
    report(4, ok,
           fmt("bucketed search vs naive scan: %d scenes, %d probes,"
               " non-sectored order and sectored minima %s",
               scenes, probes, ok ? "match" : "DIFFER"));
}

struct Fixture {
    CategoricalGrid reference;
    SampleSet samples400;
    SampleSet samples150;
    TransiogramModel model;
};

Fixture make_fixture() {
    Fixture f;
    f.reference = synth_reference(64, 64, 5, 8.0, 42);
    f.samples400 = random_sample(f.reference, 400, 1001);
    f.samples150 = random_sample(f.reference, 150, 1002);
    const LagBinning binning{20.0, 2.0, 1.0};
    f.model = fit_linear(estimate_experimental(f.samples400, binning),
                         class_proportions(f.samples400));
    return f;
}

void criterion_5_determinism(const Fixture& f) {
    SimulationConfig config{NeighborhoodConfig::sectored(4, 20.0),
                            CpdForm::TransitionPrior, 6, 2025};
    const auto first =
        simulate_ensemble(f.reference.spec(), f.samples400, f.model, config, 1);
    const auto second =
        simulate_ensemble(f.reference.spec(), f.samples400, f.model, config, 1);
    const auto parallel =
        simulate_ensemble(f.reference.spec(), f.samples400, f.model, config, 3);

    bool conditioned = true, repeatable = true, parallel_same = true;
    for (int r = 0; r < 6; ++r) {
        for (const auto& p : f.samples400.points)
            if (first.realizations[r].at(p.x, p.y) != p.label)
                conditioned = false;
        std::ostringstream a, b, c;
        write_grid(a, first.realizations[r]);
        write_grid(b, second.realizations[r]);
        write_grid(c, parallel.realizations[r]);
        if (a.str() != b.str()) repeatable = false;
        if (a.str() != c.str()) parallel_same = false;
    }
    report(5, conditioned && repeatable && parallel_same,
           fmt("conditioning honored=%s, rerun bytes identical=%s, 3 jobs vs"
               " serial identical=%s (6 realizations)",
               conditioned ? "yes" : "NO", repeatable ? "yes" : "NO",
               parallel_same ? "yes" : "NO"));
}

struct SweepTable {
    // [config][density] mean realization / optimal accuracy, seed-averaged
    std::vector<std::string> names;
    std::vector<std::array<double, 2>> mean_acc;
    std::vector<std::array<double, 2>> optimal_acc;
    bool optimal_beats_mean = true;
    double seconds = 0.0;
};

SweepTable run_acceptance_sweeps(const Fixture& f) {
    SweepSettings settings;
    settings.sample_counts = {400, 150};
    for (int k = 1; k <= 9; ++k)
        settings.configs.push_back(NeighborhoodConfig::non_sectored(k, 20.0));
    for (int s : {2, 4, 8})
        settings.configs.push_back(NeighborhoodConfig::sectored(s, 20.0));
    settings.cpd_form = CpdForm::TransitionPrior;
    settings.realizations = 20;
    settings.binning = {20.0, 2.0, 1.0};

    SweepTable table;
    for (const auto& c : settings.configs) table.names.push_back(c.describe());
    table.mean_acc.assign(settings.configs.size(), {0.0, 0.0});
    table.optimal_acc.assign(settings.configs.size(), {0.0, 0.0});

    const std::uint64_t sweep_seeds[3] = {101, 202, 303};
    const double t0 = now_seconds();
    for (const std::uint64_t seed : sweep_seeds) {
        settings.seed = seed;
        const auto result = run_sweep(f.reference, settings);
        for (const auto& row : result.rows) {
            std::size_t ci = 0;
            while (table.names[ci] != row.neighborhood) ++ci;
            const int di = row.samples == 400 ? 0 : 1;
            table.mean_acc[ci][di] += row.mean_realization_acc / 3.0;
            table.optimal_acc[ci][di] += row.optimal_acc / 3.0;
            if (row.optimal_acc <= row.mean_realization_acc)
                table.optimal_beats_mean = false;
        }
    }
    table.seconds = now_seconds() - t0;
    return table;
}

std::size_t config_at(const SweepTable& table, const std::string& name) {
    std::size_t i = 0;
    while (table.names[i] != name) ++i;
    return i;
}

void criterion_6_sector_advantage(const SweepTable& table) {
    const std::size_t s4 = config_at(table, "sectored:4");
    const std::size_t ns8 = config_at(table, "nonsectored:8");
    const std::size_t ns1 = config_at(table, "nonsectored:1");
    bool ok = table.seconds < 3 * 300.0;
    std::string detail;
    for (int di = 0; di < 2; ++di) {
        const double a4 = table.mean_acc[s4][di];
        const double a8 = table.mean_acc[ns8][di];
        const double a1 = table.mean_acc[ns1][di];
        if (!(a4 >= a8 && a4 >= a1 + 5.0)) ok = false;
        detail += fmt("@%d: s4=%.2f ns8=%.2f ns1=%.2f  ", di == 0 ? 400 : 150,
                      a4, a8, a1);
    }
    report(6, ok,
           detail + fmt("(3 seeds, %.0fs total, budget 900s)", table.seconds));
}

void criterion_7_optimal_dominates(const SweepTable& table) {
    report(7, table.optimal_beats_mean,
           fmt("optimal map beats mean realization accuracy in every sweep"
               " cell: %s",
               table.optimal_beats_mean ? "yes" : "NO"));
}

void criterion_8_density_effect(const SweepTable& table) {
    bool all_drop = true;
    double total_drop = 0.0;
    for (std::size_t ci = 0; ci < table.names.size(); ++ci) {
        const double drop = table.mean_acc[ci][0] - table.mean_acc[ci][1];
        if (drop <= 0.0) all_drop = false;
        total_drop += drop;
    }
    const double mean_drop = total_drop / static_cast<double>(table.names.size());
    const bool ok = all_drop && mean_drop >= 2.0 && mean_drop <= 15.0;
    report(8, ok,
           fmt("accuracy falls at the sparse density for all %zu configs=%s,"
               " mean drop %.2f pp (window 2..15)",
               table.names.size(), all_drop ? "yes" : "NO", mean_drop));
}

void criterion_9_fragmentation(const Fixture& f) {
    SimulationConfig size1{NeighborhoodConfig::non_sectored(1, 20.0),
                           CpdForm::TransitionPrior, 1, 4242};
    SimulationConfig sector4{NeighborhoodConfig::sectored(4, 20.0),
                             CpdForm::TransitionPrior, 1, 4242};
    const auto noisy =
        simulate_realization(f.reference.spec(), f.samples400, f.model, size1, 0);
    const auto smooth = simulate_realization(f.reference.spec(), f.samples400,
                                             f.model, sector4, 0);
    const int noisy_parts = oracle::count_components(noisy);
    const int smooth_parts = oracle::count_components(smooth);
    const bool ok = 2 * noisy_parts >= 3 * smooth_parts;
    report(9, ok,
           fmt("patch counts, same seed: nonsectored:1 -> %d, sectored:4 -> %d"
               " (need >= 1.5x)",
               noisy_parts, smooth_parts));
}

void criterion_10_transiogram_reproduction(const Fixture& f) {
    SimulationConfig config{NeighborhoodConfig::sectored(4, 20.0),
                            CpdForm::TransitionPrior, 20, 2026};
    const auto ensemble =
        simulate_ensemble(f.reference.spec(), f.samples400, f.model, config, 1);

    const LagBinning binning{20.0, 2.0, 1.0};
    const int n = f.model.n_classes;
    const int bins = binning.bin_count();
    std::vector<double> mean_probs(static_cast<std::size_t>(bins) * n * n, 0.0);
    for (const auto& grid : ensemble.realizations) {
        SampleSet everything;
        everything.n_classes = n;
        for (int y = 0; y < grid.height; ++y)
            for (int x = 0; x < grid.width; ++x)
                everything.points.push_back({x, y, grid.at(x, y)});
        const auto est = estimate_experimental(everything, binning);
        for (int b = 0; b < bins; ++b)
            for (int i = 1; i <= n; ++i)
                for (int j = 1; j <= n; ++j)
                    mean_probs[est.slot(b, i, j)] +=
                        est.prob(b, i, j) /
                        static_cast<double>(ensemble.realizations.size());
    }

    double abs_dev = 0.0;
    int entries = 0;
    for (int b = 0; b < bins; ++b) {
        const double center = binning.center(b);
        bool is_knot = false;
        for (double knot : f.model.knots) is_knot |= (knot == center);
        if (!is_knot) continue;
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                const double est = mean_probs[(static_cast<std::size_t>(b) * n +
                                               i - 1) *
                                                  n +
                                              j - 1];
                abs_dev += std::abs(est - f.model.query(i, j, center));
                ++entries;
            }
    }
    const double mad = abs_dev / entries;
    report(10, mad <= 0.1,
           fmt("ensemble transiograms vs input model at %d knot entries:"
               " mean abs dev %.4f (tol 0.10)",
               entries, mad));
}

void criterion_11_formats() {
    bool ok = true;
    std::string what = "grid, samples, model, ppm, sweep csv round-trip and"
                       " golden bytes hold";

    {
        CategoricalGrid g;
        g.width = 4;
        g.height = 3;
        g.n_classes = 5;
        g.cells = {1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5, 1};
        const std::string golden = "4 3 5\n1 2 3 4\n5 0 1 2\n3 4 5 1\n";
        std::ostringstream out;
        write_grid(out, g);
        if (out.str() != golden) ok = false;
        std::istringstream in(out.str());
        std::ostringstream again;
        write_grid(again, read_grid(in));
        if (again.str() != golden) ok = false;
    }
    {
        SampleSet set;
        set.n_classes = 3;
        set.points = {{0, 0, 1}, {12, 7, 3}, {63, 63, 2}};
        const std::string golden = "x,y,class\n0,0,1\n12,7,3\n63,63,2\n";
        std::ostringstream out;
        write_samples(out, set);
        if (out.str() != golden) ok = false;
        std::istringstream in(out.str());
        std::ostringstream again;
        write_samples(again, read_samples(in, 3));
        if (again.str() != golden) ok = false;
    }
    {
        TransiogramModel m;
        m.n_classes = 2;
        m.proportions = {0.75, 0.25};
        m.knots = {0.0, 8.0};
        m.values = {1.0, 0.0, 0.0, 1.0, 0.75, 0.25, 0.5, 0.5};
        const std::string golden =
            "# n_classes=2 proportions=0.75;0.25\n"
            "lag,p_1_1,p_1_2,p_2_1,p_2_2\n"
            "0,1,0,0,1\n"
            "8,0.75,0.25,0.5,0.5\n";
        std::ostringstream out;
        write_model(out, m);
        if (out.str() != golden) ok = false;
        // awkward 17-digit values survive bit for bit
        m.values[4] = 0.12345678901234567;
        m.values[5] = 1.0 - m.values[4];
        std::ostringstream first;
        write_model(first, m);
        std::istringstream in(first.str());
        const auto back = read_model(in);
        if (back.values != m.values) ok = false;
        std::ostringstream second;
        write_model(second, back);
        if (second.str() != first.str()) ok = false;
    }
    {
        CategoricalGrid g;
        g.width = 2;
        g.height = 1;
        g.n_classes = 3;
        g.cells = {1, 2};
        std::ostringstream out;
        write_ppm(out, g);
        const std::string golden =
            std::string("P6\n2 1\n255\n") + "\x1f\x77\xb4" + "\xff\x7f\x0e";
        if (out.str() != golden) ok = false;
    }
    {
        SweepResult result;
        result.rows = {{"sectored:4", 400, 77.164, 80.221}};
        std::ostringstream out;
        write_sweep_csv(out, result);
        if (out.str() !=
            "neighborhood,samples,mean_realization_acc,optimal_acc\n"
            "sectored:4,400,77.16,80.22\n")
            ok = false;
    }
    report(11, ok, what + (ok ? "" : ": MISMATCH"));
}

}  // namespace

int main() {
    std::printf("acceptance gate: 64x64 five-class map, counts 400/150,"
                " radius 20, 20 realizations\n");
    criterion_1_factorization();
    criterion_2_detailed_balance();
    criterion_3_estimator();
    criterion_4_neighborhoods();

    const Fixture fixture = make_fixture();
    criterion_5_determinism(fixture);

    const SweepTable table = run_acceptance_sweeps(fixture);
    criterion_6_sector_advantage(table);
    criterion_7_optimal_dominates(table);
    criterion_8_density_effect(table);
    criterion_9_fragmentation(fixture);
    criterion_10_transiogram_reproduction(fixture);
    criterion_11_formats();

    std::printf("%d of 11 criteria failed (%.0fs)\n", failures, now_seconds());
    return failures;
}
