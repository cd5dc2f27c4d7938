#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcrf/errors.hpp"
#include "mcrf/grid.hpp"

namespace mcrf {

enum class SearchKind { NonSectored, Sectored };

// Search strategy for conditioning data around an unsimulated cell:
// either the k nearest data overall, or the single nearest datum in each
// of 2, 4 or 8 angular sectors. Radius bounds the search in cell units.
struct NeighborhoodConfig {
    SearchKind kind = SearchKind::NonSectored;
    int size = 1;          // k, or the sector count
    double radius = 0.0;

    static NeighborhoodConfig non_sectored(int k, double radius) {
        NeighborhoodConfig c{SearchKind::NonSectored, k, radius};
        c.validate();
        return c;
    }

    static NeighborhoodConfig sectored(int sectors, double radius) {
        NeighborhoodConfig c{SearchKind::Sectored, sectors, radius};
        c.validate();
        return c;
    }

    void validate() const {
        if (!(radius > 0.0)) throw DataError("search radius must be positive");
        if (kind == SearchKind::NonSectored) {
            if (size < 1) throw DataError("neighborhood size must be positive");
        } else if (size != 2 && size != 4 && size != 8) {
            throw DataError("sector count must be 2, 4 or 8");
        }
    }

    std::string describe() const {
        return (kind == SearchKind::NonSectored ? "nonsectored:" : "sectored:") +
               std::to_string(size);
    }

    // Parses "nonsectored:<k>" or "sectored:<2|4|8>".
    static NeighborhoodConfig parse(const std::string& text, double radius) {
        const auto colon = text.find(':');
        if (colon == std::string::npos)
            throw DataError("neighborhood must be nonsectored:<k> or sectored:<s>");
        const std::string head = text.substr(0, colon);
        const int size = detail::parse_int(text.substr(colon + 1), "neighborhood size");
        if (head == "nonsectored") return non_sectored(size, radius);
        if (head == "sectored") return sectored(size, radius);
        throw DataError("unknown neighborhood kind: " + head);
    }

    bool operator==(const NeighborhoodConfig&) const = default;
};

// A conditioning datum as seen from a search center. lag is the Euclidean
// distance (always > 0; the center itself is never a datum) and sector the
// angular sector index, or -1 for non-sectored searches.
struct NearestDatum {
    int x = 0;
    int y = 0;
    int label = 0;
    double lag = 0.0;
    int sector = -1;

    bool operator==(const NearestDatum&) const = default;
};

struct Neighborhood {
    int center_x = 0;
    int center_y = 0;
    std::vector<NearestDatum> data;  // ascending lag, ties by (y, x)

    bool empty() const { return data.empty(); }
    std::size_t size() const { return data.size(); }
};

// Sector index of offset (dx, dy): floor(s * theta / 2pi) with theta the
// angle from the +x axis toward +y (rows grow downward). Boundary rays
// belong to the sector they open. Integer comparisons only, so cells on
// diagonals and axes classify exactly.
inline int sector_index(int dx, int dy, int sectors) {
    switch (sectors) {
        case 2:
            return (dy > 0 || (dy == 0 && dx > 0)) ? 0 : 1;
        case 4:
            if (dx > 0 && dy >= 0) return 0;
            if (dy > 0) return 1;
            if (dx < 0) return 2;
            return 3;
        case 8:
            if (dy >= 0) {
                if (dx > 0) return dy < dx ? 0 : 1;
                if (dy == 0) return 4;  // dx < 0 on the -x axis
                return -dx < dy ? 2 : 3;
            }
            if (dx < 0) return dy > dx ? 4 : 5;
            return dx < -dy ? 6 : 7;
        default:
            throw DataError("sector count must be 2, 4 or 8");
    }
}

// An occupied cell returned by raw radius queries.
struct Occupant {
    int x = 0;
    int y = 0;
    int label = 0;
    long long dist2 = 0;

    bool operator==(const Occupant&) const = default;
};

// Bucketed index over occupied cells (samples plus already-simulated
// cells). Buckets are square tiles of the grid; searches expand outward
// ring by ring and stop once no closer datum can exist.
class ConditioningIndex {
public:
    ConditioningIndex(const GridSpec& spec, int bucket_size)
        : spec_(spec), bucket_size_(bucket_size) {
        spec.validate();
        if (bucket_size < 1) throw DataError("bucket size must be positive");
        bx_ = (spec.width + bucket_size - 1) / bucket_size;
        by_ = (spec.height + bucket_size - 1) / bucket_size;
        buckets_.resize(static_cast<std::size_t>(bx_) * by_);
        occupied_.assign(static_cast<std::size_t>(spec.cell_count()), false);
    }

    const GridSpec& spec() const { return spec_; }
    int size() const { return count_; }

    bool occupied(int x, int y) const {
        return occupied_[static_cast<std::size_t>(y) * spec_.width + x];
    }

    void insert(int x, int y, int label) {
        if (x < 0 || x >= spec_.width || y < 0 || y >= spec_.height)
            throw DataError("datum outside the grid");
        if (label < 1 || label > spec_.n_classes)
            throw DataError("datum label outside 1..n_classes");
        auto flag = occupied_.begin() + (static_cast<std::size_t>(y) * spec_.width + x);
        if (*flag)
            throw DataError("cell (" + std::to_string(x) + "," +
                            std::to_string(y) + ") already holds a datum");
        *flag = true;
        bucket(x / bucket_size_, y / bucket_size_).push_back({x, y, label});
        ++count_;
    }

    // Every datum within `radius` of the center, nearest first (distance,
    // then y, then x). Includes the center cell itself if occupied.
    std::vector<Occupant> within_radius(int cx, int cy, double radius) const {
        std::vector<Occupant> out;
        const double r2 = radius * radius;
        const int lo_bx = bucket_clamp((cx - static_cast<int>(radius) - 1), bx_);
        const int hi_bx = bucket_clamp((cx + static_cast<int>(radius) + 1), bx_);
        const int lo_by = bucket_clamp((cy - static_cast<int>(radius) - 1), by_);
        const int hi_by = bucket_clamp((cy + static_cast<int>(radius) + 1), by_);
        for (int byi = lo_by; byi <= hi_by; ++byi)
            for (int bxi = lo_bx; bxi <= hi_bx; ++bxi)
                for (const auto& e : bucket(bxi, byi)) {
                    const long long d2 = dist2(e, cx, cy);
                    if (static_cast<double>(d2) <= r2)
                        out.push_back({e.x, e.y, e.label, d2});
                }
        std::sort(out.begin(), out.end(), [](const Occupant& a, const Occupant& b) {
            return std::tie(a.dist2, a.y, a.x) < std::tie(b.dist2, b.y, b.x);
        });
        return out;
    }

    // k nearest data within radius. Ties resolve by (y, x), so results are
    // a pure function of the index contents.
    Neighborhood find_non_sectored(int cx, int cy, int k, double radius) const {
        const double r2 = radius * radius;
        std::vector<Occupant> best;
        ring_search(cx, cy, radius, [&](const Entry& e) {
            const long long d2 = dist2(e, cx, cy);
            if (d2 == 0 || static_cast<double>(d2) > r2) return;
            const Occupant cand{e.x, e.y, e.label, d2};
            if (static_cast<int>(best.size()) < k) {
                best.insert(insert_pos(best, cand), cand);
            } else if (closer(cand, best.back())) {
                best.pop_back();
                best.insert(insert_pos(best, cand), cand);
            }
        }, [&](long long next_ring_d2) {
            return static_cast<int>(best.size()) == k &&
                   best.back().dist2 < next_ring_d2;
        });
        return to_neighborhood(cx, cy, best, -1);
    }

    // Nearest datum per angular sector, within radius.
    Neighborhood find_sectored(int cx, int cy, int sectors, double radius) const {
        const double r2 = radius * radius;
        std::vector<std::optional<Occupant>> best(sectors);
        int filled = 0;
        ring_search(cx, cy, radius, [&](const Entry& e) {
            const long long d2 = dist2(e, cx, cy);
            if (d2 == 0 || static_cast<double>(d2) > r2) return;
            const int s = sector_index(e.x - cx, e.y - cy, sectors);
            const Occupant cand{e.x, e.y, e.label, d2};
            if (!best[s]) {
                best[s] = cand;
                ++filled;
            } else if (closer(cand, *best[s])) {
                best[s] = cand;
            }
        }, [&](long long next_ring_d2) {
            if (filled < sectors) return false;
            for (const auto& b : best)
                if (b->dist2 >= next_ring_d2) return false;
            return true;
        });
        std::vector<Occupant> found;
        std::vector<int> sector_of;
        for (int s = 0; s < sectors; ++s)
            if (best[s]) {
                found.push_back(*best[s]);
                sector_of.push_back(s);
            }
        std::vector<std::size_t> order(found.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return closer(found[a], found[b]);
        });
        Neighborhood nbhd{cx, cy, {}};
        for (std::size_t i : order)
            nbhd.data.push_back({found[i].x, found[i].y, found[i].label,
                                 std::sqrt(static_cast<double>(found[i].dist2)),
                                 sector_of[i]});
        return nbhd;
    }

private:
    struct Entry {
        int x, y, label;
    };

    static bool closer(const Occupant& a, const Occupant& b) {
        return std::tie(a.dist2, a.y, a.x) < std::tie(b.dist2, b.y, b.x);
    }

    static std::vector<Occupant>::iterator insert_pos(std::vector<Occupant>& v,
                                                      const Occupant& cand) {
        return std::upper_bound(v.begin(), v.end(), cand,
                                [](const Occupant& a, const Occupant& b) {
                                    return closer(a, b);
                                });
    }

    static long long dist2(const Entry& e, int cx, int cy) {
        const long long dx = e.x - cx;
        const long long dy = e.y - cy;
        return dx * dx + dy * dy;
    }

    int bucket_clamp(int coord, int buckets) const {
        return std::clamp(coord / bucket_size_, 0, buckets - 1);
    }

    std::vector<Entry>& bucket(int bxi, int byi) {
        return buckets_[static_cast<std::size_t>(byi) * bx_ + bxi];
    }

    const std::vector<Entry>& bucket(int bxi, int byi) const {
        return buckets_[static_cast<std::size_t>(byi) * bx_ + bxi];
    }

    // Visits buckets in expanding Chebyshev rings around the center. A cell
    // in ring L is at least (L-1)*bucket_size + 1 away, so `done` gets the
    // square of the next ring's minimum distance and can stop the walk as
    // soon as no improvement is possible.
    template <typename Visit, typename Done>
    void ring_search(int cx, int cy, double radius, Visit&& visit,
                     Done&& done) const {
        const int cbx = std::clamp(cx / bucket_size_, 0, bx_ - 1);
        const int cby = std::clamp(cy / bucket_size_, 0, by_ - 1);
        const int max_ring = std::max(std::max(cbx, bx_ - 1 - cbx),
                                      std::max(cby, by_ - 1 - cby));
        for (int ring = 0; ring <= max_ring; ++ring) {
            const double ring_min =
                ring == 0 ? 0.0 : static_cast<double>(ring - 1) * bucket_size_ + 1;
            if (ring_min > radius) break;
            scan_ring(cbx, cby, ring, visit);
            const long long next_min =
                static_cast<long long>(ring) * bucket_size_ + 1;
            if (done(next_min * next_min)) break;
        }
    }

    template <typename Visit>
    void scan_ring(int cbx, int cby, int ring, Visit&& visit) const {
        const int x0 = cbx - ring, x1 = cbx + ring;
        const int y0 = cby - ring, y1 = cby + ring;
        for (int byi = std::max(y0, 0); byi <= std::min(y1, by_ - 1); ++byi) {
            const bool edge_row = (byi == y0 || byi == y1);
            for (int bxi = std::max(x0, 0); bxi <= std::min(x1, bx_ - 1); ++bxi) {
                if (!edge_row && bxi != x0 && bxi != x1) continue;
                for (const auto& e : bucket(bxi, byi)) visit(e);
            }
        }
    }

    Neighborhood to_neighborhood(int cx, int cy, const std::vector<Occupant>& best,
                                 int sector) const {
        Neighborhood nbhd{cx, cy, {}};
        for (const auto& b : best)
            nbhd.data.push_back({b.x, b.y, b.label,
                                 std::sqrt(static_cast<double>(b.dist2)), sector});
        return nbhd;
    }

    GridSpec spec_;
    int bucket_size_;
    int bx_ = 0, by_ = 0;
    int count_ = 0;
    std::vector<std::vector<Entry>> buckets_;
    std::vector<bool> occupied_;
};

inline ConditioningIndex build_index(const SampleSet& samples,
                                     const GridSpec& spec,
                                     int bucket_size = 16) {
    samples.validate();
    spec.validate();
    if (samples.n_classes > spec.n_classes)
        throw DataError("sample classes exceed grid classes");
    ConditioningIndex index(spec, bucket_size);
    for (const auto& p : samples.points) index.insert(p.x, p.y, p.label);
    return index;
}

inline Neighborhood find_neighborhood(const ConditioningIndex& index, int cx,
                                      int cy, const NeighborhoodConfig& config) {
    config.validate();
    if (config.kind == SearchKind::NonSectored)
        return index.find_non_sectored(cx, cy, config.size, config.radius);
    return index.find_sectored(cx, cy, config.size, config.radius);
}

}  // namespace mcrf
