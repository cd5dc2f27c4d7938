#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <thread>
#include <vector>

#include "mcrf/errors.hpp"
#include "mcrf/grid.hpp"
#include "mcrf/neighborhood.hpp"
#include "mcrf/rng.hpp"
#include "mcrf/transiogram.hpp"

namespace mcrf {

enum class CpdForm { TransitionPrior, MarginalPrior };

inline CpdForm parse_cpd_form(const std::string& text) {
    if (text == "transition") return CpdForm::TransitionPrior;
    if (text == "marginal") return CpdForm::MarginalPrior;
    throw DataError("cpd form must be 'transition' or 'marginal'");
}

inline std::string describe(CpdForm form) {
    return form == CpdForm::TransitionPrior ? "transition" : "marginal";
}

// Conditional distribution of one cell's class given its neighborhood.
// probs[c-1] is the probability of class c; the vector sums to 1.
struct LocalCpd {
    std::vector<double> probs;
    bool degenerate = false;  // numerator vanished, proportions substituted
};

struct SimulationConfig {
    NeighborhoodConfig neighborhood;
    CpdForm cpd_form = CpdForm::MarginalPrior;
    int realizations = 1;
    std::uint64_t seed = 0;

    void validate() const {
        neighborhood.validate();
        if (realizations < 1) throw DataError("need at least one realization");
    }
};

struct SimulationStats {
    std::uint64_t empty_neighborhoods = 0;
    std::uint64_t degenerate_cpds = 0;

    SimulationStats& operator+=(const SimulationStats& other) {
        empty_neighborhoods += other.empty_neighborhoods;
        degenerate_cpds += other.degenerate_cpds;
        return *this;
    }
};

struct RealizationEnsemble {
    GridSpec spec;
    SimulationConfig config;
    std::vector<CategoricalGrid> realizations;
    SimulationStats stats;
};

namespace detail {

// Chains the interpolated transition probabilities into an unnormalized
// class weight vector. anchor < 0 gives the marginal form
//   w(c) = p_c * prod_g p(c -> class_g | lag_g)
// anchor = g1 the transition form, where the chain starts at datum g1
//   w(c) = p(class_g1 -> c | lag_g1) * prod_{g != g1} p(c -> class_g | lag_g)
inline void class_weights(const TransiogramModel& model, const Neighborhood& nbhd,
                          int anchor, std::vector<double>& weights,
                          std::vector<double>& buf) {
    const int n = model.n_classes;
    weights.assign(n, 1.0);
    if (anchor < 0) {
        for (int c = 0; c < n; ++c) weights[c] = model.proportions[c];
    } else {
        const auto& u1 = nbhd.data[anchor];
        model.row_at(u1.label, u1.lag, weights);
    }
    buf.resize(n);
    for (std::size_t g = 0; g < nbhd.data.size(); ++g) {
        if (static_cast<int>(g) == anchor) continue;
        const auto& datum = nbhd.data[g];
        model.col_at(datum.label, datum.lag, buf);
        for (int c = 0; c < n; ++c) weights[c] *= buf[c];
    }
}

inline LocalCpd normalize_weights(const TransiogramModel& model,
                                  std::vector<double>&& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    LocalCpd cpd;
    if (total > 0.0) {
        cpd.probs = std::move(weights);
        for (double& p : cpd.probs) p /= total;
    } else {
        cpd.probs = model.proportions;
        cpd.degenerate = true;
    }
    return cpd;
}

}  // namespace detail

// Class distribution given the nearest data, with the chain anchored at
// one datum (the nearest by default): that datum conditions the center
// through its transition row, every other datum through its column, and
// the products are normalized over the center class. Assumes the data are
// conditionally independent given the center.
inline LocalCpd local_cpd_transition_prior(const TransiogramModel& model,
                                           const Neighborhood& nbhd,
                                           int anchor_index = 0) {
    if (nbhd.empty())
        throw DataError("transition-prior form needs at least one datum");
    if (anchor_index < 0 || anchor_index >= static_cast<int>(nbhd.size()))
        throw DataError("anchor index outside the neighborhood");
    std::vector<double> weights, buf;
    detail::class_weights(model, nbhd, anchor_index, weights, buf);
    return detail::normalize_weights(model, std::move(weights));
}

// Same likelihood, but the center is conditioned through its own marginal
// proportions; every datum enters as a column factor. With no data this
// returns the proportions themselves. Under detailed balance the two
// forms coincide.
inline LocalCpd local_cpd_marginal_prior(const TransiogramModel& model,
                                         const Neighborhood& nbhd) {
    if (nbhd.empty()) {
        LocalCpd cpd;
        cpd.probs = model.proportions;
        return cpd;
    }
    std::vector<double> weights, buf;
    detail::class_weights(model, nbhd, -1, weights, buf);
    return detail::normalize_weights(model, std::move(weights));
}

// Draws one realization over the unsampled cells along a random path.
// Deterministic in (seed, realization_index): the per-realization RNG is
// an independent stream, simulated cells condition later ones, and the
// conditioning data pass through unchanged.
inline CategoricalGrid simulate_realization(const GridSpec& spec,
                                            const SampleSet& samples,
                                            const TransiogramModel& model,
                                            const SimulationConfig& config,
                                            int realization_index,
                                            SimulationStats* stats = nullptr) {
    spec.validate();
    config.validate();
    samples.validate();
    model.validate(1e-6);
    if (model.n_classes != spec.n_classes)
        throw DataError("model classes do not match the grid");
    if (samples.n_classes > spec.n_classes)
        throw DataError("sample classes exceed grid classes");
    if (realization_index < 0) throw DataError("realization index must be >= 0");

    CategoricalGrid grid = CategoricalGrid::filled(spec, 0);
    for (const auto& p : samples.points) {
        if (!grid.in_bounds(p.x, p.y))
            throw DataError("sample outside the grid");
        grid.at(p.x, p.y) = p.label;
    }

    const int bucket = std::max(1, static_cast<int>(config.neighborhood.radius / 2.0));
    ConditioningIndex index = build_index(samples, spec, bucket);

    std::vector<int> path;
    path.reserve(grid.cells.size());
    for (int i = 0; i < static_cast<int>(grid.cells.size()); ++i)
        if (grid.cells[i] == 0) path.push_back(i);

    Rng rng(config.seed, static_cast<std::uint64_t>(realization_index));
    for (std::size_t i = path.size(); i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(path[i - 1], path[j]);
    }

    SimulationStats local;
    std::vector<double> weights, buf;
    for (int cell : path) {
        const int x = cell % spec.width;
        const int y = cell / spec.width;
        const Neighborhood nbhd = find_neighborhood(index, x, y, config.neighborhood);

        LocalCpd cpd;
        if (nbhd.empty()) {
            ++local.empty_neighborhoods;
            cpd.probs = model.proportions;
        } else if (config.cpd_form == CpdForm::TransitionPrior) {
            cpd = local_cpd_transition_prior(model, nbhd);
        } else {
            cpd = local_cpd_marginal_prior(model, nbhd);
        }
        if (cpd.degenerate) ++local.degenerate_cpds;

        // inverse-CDF draw with a single uniform
        const double u = rng.uniform();
        int label = spec.n_classes;
        double acc = 0.0;
        for (int c = 1; c <= spec.n_classes; ++c) {
            acc += cpd.probs[c - 1];
            if (u < acc) {
                label = c;
                break;
            }
        }
        grid.at(x, y) = label;
        index.insert(x, y, label);
    }
    if (stats) *stats += local;
    return grid;
}

// Runs `config.realizations` independent realizations. Each depends only
// on (seed, index), so any job count produces the identical ensemble.
inline RealizationEnsemble simulate_ensemble(const GridSpec& spec,
                                             const SampleSet& samples,
                                             const TransiogramModel& model,
                                             const SimulationConfig& config,
                                             int jobs = 1) {
    config.validate();
    RealizationEnsemble ensemble;
    ensemble.spec = spec;
    ensemble.config = config;
    ensemble.realizations.resize(config.realizations);
    std::vector<SimulationStats> stats(config.realizations);

    const int workers = std::clamp(jobs, 1, config.realizations);
    if (workers == 1) {
        for (int r = 0; r < config.realizations; ++r)
            ensemble.realizations[r] =
                simulate_realization(spec, samples, model, config, r, &stats[r]);
    } else {
        std::atomic<int> cursor{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            for (;;) {
                const int r = cursor.fetch_add(1);
                if (r >= config.realizations) return;
                try {
                    ensemble.realizations[r] = simulate_realization(
                        spec, samples, model, config, r, &stats[r]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }
    for (const auto& s : stats) ensemble.stats += s;
    return ensemble;
}

}  // namespace mcrf
