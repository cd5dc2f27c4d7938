#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcrf/errors.hpp"
#include "mcrf/rng.hpp"

namespace mcrf {

// Shared shape of grids, sample sets and simulations.
struct GridSpec {
    int width = 0;
    int height = 0;
    int n_classes = 0;

    long long cell_count() const {
        return static_cast<long long>(width) * height;
    }

    void validate() const {
        if (width < 1 || height < 1)
            throw DataError("grid dimensions must be positive");
        if (n_classes < 2)
            throw DataError("need at least two classes");
    }

    bool operator==(const GridSpec&) const = default;
};

// Raster of class labels, row-major with row 0 at the top. Label 0 is a
// no-data / not-yet-simulated cell; observed classes are 1..n_classes.
struct CategoricalGrid {
    int width = 0;
    int height = 0;
    int n_classes = 0;
    std::vector<int> cells;

    static CategoricalGrid filled(const GridSpec& spec, int label = 0) {
        spec.validate();
        CategoricalGrid g;
        g.width = spec.width;
        g.height = spec.height;
        g.n_classes = spec.n_classes;
        g.cells.assign(static_cast<std::size_t>(spec.cell_count()), label);
        return g;
    }

    GridSpec spec() const { return {width, height, n_classes}; }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    int at(int x, int y) const {
        return cells[static_cast<std::size_t>(y) * width + x];
    }

    int& at(int x, int y) {
        return cells[static_cast<std::size_t>(y) * width + x];
    }

    void validate() const {
        spec().validate();
        if (cells.size() != static_cast<std::size_t>(spec().cell_count()))
            throw DataError("cell buffer does not match grid dimensions");
        for (int label : cells)
            if (label < 0 || label > n_classes)
                throw DataError("cell label " + std::to_string(label) +
                                " outside 0.." + std::to_string(n_classes));
    }

    bool operator==(const CategoricalGrid&) const = default;
};

// One conditioning observation. Label is a real class, never 0.
struct SamplePoint {
    int x = 0;
    int y = 0;
    int label = 0;

    bool operator==(const SamplePoint&) const = default;
};

struct SampleSet {
    std::vector<SamplePoint> points;
    int n_classes = 0;

    void validate() const {
        if (n_classes < 2) throw DataError("need at least two classes");
        std::set<std::pair<int, int>> seen;
        for (const auto& p : points) {
            if (p.x < 0 || p.y < 0)
                throw DataError("sample coordinates must be non-negative");
            if (p.label < 1 || p.label > n_classes)
                throw DataError("sample label " + std::to_string(p.label) +
                                " outside 1.." + std::to_string(n_classes));
            if (!seen.insert({p.x, p.y}).second)
                throw DataError("duplicate sample cell (" + std::to_string(p.x) +
                                "," + std::to_string(p.y) + ")");
        }
    }

    bool operator==(const SampleSet&) const = default;
};

namespace detail {

inline int parse_int(std::string_view token, const char* what) {
    int value = 0;
    const char* first = token.data();
    const char* last = first + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError(std::string("expected integer ") + what + ", got '" +
                        std::string(token) + "'");
    return value;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

// Reads one line, dropping a trailing '\r' so CRLF files parse.
inline bool get_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Grid text format
//
//   width height n_classes
//   <height rows of width labels, space-separated, 0 = no-data>
// ---------------------------------------------------------------------------

inline CategoricalGrid read_grid(std::istream& in) {
    std::string line;
    if (!detail::get_line(in, line))
        throw DataError("empty grid file");
    auto header = detail::split_ws(line);
    if (header.size() != 3)
        throw DataError("grid header must be 'width height n_classes'");
    GridSpec spec;
    spec.width = detail::parse_int(header[0], "width");
    spec.height = detail::parse_int(header[1], "height");
    spec.n_classes = detail::parse_int(header[2], "n_classes");
    spec.validate();

    CategoricalGrid grid = CategoricalGrid::filled(spec, 0);
    for (int y = 0; y < spec.height; ++y) {
        if (!detail::get_line(in, line))
            throw DataError("grid truncated at row " + std::to_string(y));
        auto tokens = detail::split_ws(line);
        if (tokens.size() != static_cast<std::size_t>(spec.width))
            throw DataError("row " + std::to_string(y) + " has " +
                            std::to_string(tokens.size()) + " labels, expected " +
                            std::to_string(spec.width));
        for (int x = 0; x < spec.width; ++x)
            grid.at(x, y) = detail::parse_int(tokens[x], "label");
    }
    while (detail::get_line(in, line))
        if (!detail::split_ws(line).empty())
            throw DataError("trailing content after grid rows");
    grid.validate();
    return grid;
}

inline void write_grid(std::ostream& out, const CategoricalGrid& grid) {
    grid.validate();
    out << grid.width << ' ' << grid.height << ' ' << grid.n_classes << '\n';
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            if (x) out << ' ';
            out << grid.at(x, y);
        }
        out << '\n';
    }
}

inline CategoricalGrid load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid file: " + path);
    return read_grid(in);
}

inline void save_grid(const CategoricalGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write grid file: " + path);
    write_grid(out, grid);
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Sample CSV format
//
//   x,y,class
//   12,7,3
// ---------------------------------------------------------------------------

inline SampleSet read_samples(std::istream& in, int n_classes = 0) {
    std::string line;
    if (!detail::get_line(in, line))
        throw DataError("empty sample file");
    if (line != "x,y,class")
        throw DataError("sample header must be 'x,y,class'");
    SampleSet set;
    int max_label = 0;
    while (detail::get_line(in, line)) {
        if (line.empty()) continue;
        std::string_view view = line;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= view.size(); ++i) {
            if (i == view.size() || view[i] == ',') {
                fields.push_back(view.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 3)
            throw DataError("sample row needs 3 fields: " + line);
        SamplePoint p;
        p.x = detail::parse_int(fields[0], "x");
        p.y = detail::parse_int(fields[1], "y");
        p.label = detail::parse_int(fields[2], "class");
        max_label = std::max(max_label, p.label);
        set.points.push_back(p);
    }
    set.n_classes = n_classes > 0 ? n_classes : std::max(max_label, 2);
    set.validate();
    return set;
}

inline void write_samples(std::ostream& out, const SampleSet& set) {
    set.validate();
    out << "x,y,class\n";
    for (const auto& p : set.points)
        out << p.x << ',' << p.y << ',' << p.label << '\n';
}

inline SampleSet load_samples(const std::string& path, int n_classes = 0) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sample file: " + path);
    return read_samples(in, n_classes);
}

inline void save_samples(const SampleSet& set, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write sample file: " + path);
    write_samples(out, set);
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

// Draws `count` distinct labelled cells, uniformly without replacement.
// No-data cells are never drawn.
inline SampleSet random_sample(const CategoricalGrid& grid, int count,
                               std::uint64_t seed) {
    grid.validate();
    if (count < 1) throw DataError("sample count must be positive");

    std::vector<int> eligible;
    for (int i = 0; i < static_cast<int>(grid.cells.size()); ++i)
        if (grid.cells[i] != 0) eligible.push_back(i);
    if (count > static_cast<int>(eligible.size()))
        throw DataError("requested " + std::to_string(count) +
                        " samples but only " + std::to_string(eligible.size()) +
                        " labelled cells exist");

    Rng rng(seed);
    SampleSet set;
    set.n_classes = grid.n_classes;
    // Partial Fisher-Yates: after k swaps the first k slots are the draw.
    for (int k = 0; k < count; ++k) {
        const auto j = k + static_cast<int>(rng.below(eligible.size() - k));
        std::swap(eligible[k], eligible[j]);
        const int idx = eligible[k];
        SamplePoint p;
        p.x = idx % grid.width;
        p.y = idx / grid.width;
        p.label = grid.cells[idx];
        set.points.push_back(p);
    }
    return set;
}

// Per-class frequencies of a sample set, indexed by label-1.
inline std::vector<double> class_proportions(const SampleSet& set) {
    set.validate();
    if (set.points.empty()) throw DataError("sample set is empty");
    std::vector<double> props(set.n_classes, 0.0);
    for (const auto& p : set.points) props[p.label - 1] += 1.0;
    for (double& v : props) v /= static_cast<double>(set.points.size());
    return props;
}

}  // namespace mcrf
