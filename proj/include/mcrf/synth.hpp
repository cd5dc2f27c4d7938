#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mcrf/errors.hpp"
#include "mcrf/grid.hpp"
#include "mcrf/rng.hpp"

namespace mcrf {

namespace detail {

// Class weights on a halving ladder scaled to 0.96, with the last class
// pinned at 0.04 so every synthetic map carries one rare class.
inline std::vector<double> synth_weights(int n_classes) {
    std::vector<double> w(n_classes);
    double sum = 0.0;
    for (int c = 0; c < n_classes - 1; ++c) {
        w[c] = std::pow(2.0, n_classes - 2 - c);
        sum += w[c];
    }
    for (int c = 0; c < n_classes - 1; ++c) w[c] *= 0.96 / sum;
    w[n_classes - 1] = 0.04;
    return w;
}

inline int majority_label(const CategoricalGrid& grid, int x, int y) {
    int counts[17] = {0};
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (grid.in_bounds(nx, ny)) ++counts[grid.at(nx, ny)];
        }
    int best = 1;
    for (int c = 2; c <= grid.n_classes; ++c)
        if (counts[c] > counts[best]) best = c;
    return best;
}

}  // namespace detail

// Deterministic blobby reference map: class-weighted Voronoi growth from
// random nuclei, smoothed with two majority passes. blob_scale is the
// rough patch diameter in cells; the last class stays rare (under 5% at
// sensible sizes). Every class is guaranteed present.
inline CategoricalGrid synth_reference(int width, int height, int n_classes,
                                       double blob_scale, std::uint64_t seed) {
    GridSpec spec{width, height, n_classes};
    spec.validate();
    if (n_classes > 16) throw DataError("synthetic maps support up to 16 classes");
    if (!(blob_scale > 0.0)) throw DataError("blob_scale must be positive");
    if (spec.cell_count() < 4LL * n_classes)
        throw DataError("grid too small to host every class");

    const auto weights = detail::synth_weights(n_classes);
    const long long cells = spec.cell_count();
    const int total = std::max<int>(
        n_classes,
        static_cast<int>(std::llround(cells / (blob_scale * blob_scale))));

    // nuclei per class: rare class exactly one, the rest share the remainder
    std::vector<int> quota(n_classes, 0);
    quota[n_classes - 1] = 1;
    int assigned = 1;
    for (int c = 0; c < n_classes - 1; ++c) {
        quota[c] = std::max(
            1, static_cast<int>(std::llround((total - 1) * weights[c] / 0.96)));
        assigned += quota[c];
    }
    for (int c = 0; assigned > total && c < n_classes - 1; ) {
        if (quota[c] > 1) {
            --quota[c];
            --assigned;
        } else {
            ++c;
        }
    }
    quota[0] += std::max(0, total - assigned);

    struct Nucleus {
        int x, y, label;
    };
    Rng rng(seed);
    std::vector<Nucleus> nuclei;
    std::vector<bool> taken(cells, false);
    std::vector<int> first_nucleus(n_classes, -1);
    for (int c = 0; c < n_classes; ++c)
        for (int q = 0; q < quota[c]; ++q) {
            long long cell;
            do {
                cell = static_cast<long long>(rng.below(cells));
            } while (taken[cell]);
            taken[cell] = true;
            if (first_nucleus[c] < 0)
                first_nucleus[c] = static_cast<int>(nuclei.size());
            nuclei.push_back({static_cast<int>(cell % width),
                              static_cast<int>(cell / width), c + 1});
        }

    CategoricalGrid grid = CategoricalGrid::filled(spec, 0);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            long long best = -1;
            int label = 1;
            for (const auto& nucleus : nuclei) {
                const long long dx = nucleus.x - x, dy = nucleus.y - y;
                const long long d2 = dx * dx + dy * dy;
                if (best < 0 || d2 < best) {
                    best = d2;
                    label = nucleus.label;
                }
            }
            grid.at(x, y) = label;
        }

    for (int pass = 0; pass < 2; ++pass) {
        CategoricalGrid smoothed = grid;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                smoothed.at(x, y) = detail::majority_label(grid, x, y);
        grid = smoothed;
    }

    // smoothing can erase a class entirely; restamp it at its own nucleus
    for (int round = 0; round < n_classes + 4; ++round) {
        std::vector<bool> present(n_classes + 1, false);
        for (int cell : grid.cells) present[cell] = true;
        int missing = -1;
        for (int c = 1; c <= n_classes; ++c)
            if (!present[c]) {
                missing = c;
                break;
            }
        if (missing < 0) {
            grid.validate();
            return grid;
        }
        const auto& nucleus = nuclei[first_nucleus[missing - 1]];
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int x = std::min(nucleus.x + dx, width - 1);
                const int y = std::min(nucleus.y + dy, height - 1);
                grid.at(x, y) = missing;
            }
    }
    throw DataError("could not keep every class on the map; enlarge the grid");
}

}  // namespace mcrf
