#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mcrf/errors.hpp"
#include "mcrf/grid.hpp"

namespace mcrf {

// Lag axis discretization. A sample pair at distance d is counted into
// every bin whose center lies within `tolerance` of d, so neighbouring
// windows may overlap when tolerance exceeds half the bin width.
struct LagBinning {
    double max_lag = 0.0;
    double bin_width = 0.0;
    double tolerance = 0.0;

    void validate() const {
        if (!(max_lag > 0.0) || !(bin_width > 0.0))
            throw DataError("lag binning needs positive max_lag and bin_width");
        if (!(tolerance >= 0.0))
            throw DataError("lag tolerance must be non-negative");
        if (bin_count() < 1)
            throw DataError("lag binning yields no bins");
    }

    int bin_count() const {
        return static_cast<int>(std::floor(max_lag / bin_width + 1e-9));
    }

    double center(int bin) const { return (bin + 1) * bin_width; }

    // Invokes fn(bin) for every bin whose window contains distance d.
    template <typename Fn>
    void each_bin_for(double d, Fn&& fn) const {
        const int bins = bin_count();
        int lo = static_cast<int>(std::floor((d - tolerance) / bin_width)) - 2;
        int hi = static_cast<int>(std::floor((d + tolerance) / bin_width));
        lo = std::max(lo, 0);
        hi = std::min(hi, bins - 1);
        for (int b = lo; b <= hi; ++b)
            if (std::abs(d - center(b)) <= tolerance) fn(b);
    }
};

// Pair counts F_ik(h) per lag bin plus the derived transition frequencies.
// A (from-class, bin) row with no pairs has undefined frequencies (NaN).
struct ExperimentalTransiograms {
    int n_classes = 0;
    LagBinning binning;
    std::vector<double> lag_centers;
    std::vector<std::uint64_t> counts;  // [bin][from-1][to-1]
    std::vector<double> probs;          // NaN where the row is empty

    std::size_t slot(int bin, int from, int to) const {
        return (static_cast<std::size_t>(bin) * n_classes + (from - 1)) *
                   n_classes +
               (to - 1);
    }

    std::uint64_t count(int bin, int from, int to) const {
        return counts[slot(bin, from, to)];
    }

    double prob(int bin, int from, int to) const {
        return probs[slot(bin, from, to)];
    }

    bool defined(int bin, int from) const {
        return !std::isnan(probs[slot(bin, from, 1)]);
    }
};

// Tallies ordered sample pairs into lag bins and normalizes each
// (from-class, bin) row by its total pair count.
inline ExperimentalTransiograms estimate_experimental(const SampleSet& samples,
                                                      const LagBinning& binning) {
    samples.validate();
    binning.validate();
    if (samples.points.size() < 2)
        throw DataError("need at least two samples to estimate transiograms");

    ExperimentalTransiograms result;
    result.n_classes = samples.n_classes;
    result.binning = binning;
    const int bins = binning.bin_count();
    for (int b = 0; b < bins; ++b) result.lag_centers.push_back(binning.center(b));
    const std::size_t table = static_cast<std::size_t>(bins) *
                              samples.n_classes * samples.n_classes;
    result.counts.assign(table, 0);
    result.probs.assign(table, std::numeric_limits<double>::quiet_NaN());

    const auto& pts = samples.points;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = 0; b < pts.size(); ++b) {
            if (a == b) continue;
            const double dx = pts[a].x - pts[b].x;
            const double dy = pts[a].y - pts[b].y;
            const double d = std::sqrt(dx * dx + dy * dy);
            binning.each_bin_for(d, [&](int bin) {
                ++result.counts[result.slot(bin, pts[a].label, pts[b].label)];
            });
        }
    }

    const int n = samples.n_classes;
    for (int bin = 0; bin < bins; ++bin) {
        for (int i = 1; i <= n; ++i) {
            std::uint64_t row_total = 0;
            for (int k = 1; k <= n; ++k) row_total += result.count(bin, i, k);
            if (row_total == 0) continue;
            for (int k = 1; k <= n; ++k)
                result.probs[result.slot(bin, i, k)] =
                    static_cast<double>(result.count(bin, i, k)) /
                    static_cast<double>(row_total);
        }
    }
    return result;
}

// Continuous transition-probability model: piecewise-linear in the scalar
// lag between knots, constant past the last knot. Knot 0 is the exact
// identity (a class transitions to itself over zero distance), and every
// row sums to 1 at every knot, hence at every lag by linearity.
struct TransiogramModel {
    int n_classes = 0;
    std::vector<double> proportions;  // [class-1]
    std::vector<double> knots;        // increasing, knots[0] == 0
    std::vector<double> values;       // [knot][from-1][to-1]

    std::size_t slot(int knot, int from, int to) const {
        return (static_cast<std::size_t>(knot) * n_classes + (from - 1)) *
                   n_classes +
               (to - 1);
    }

    double value_at_knot(int knot, int from, int to) const {
        return values[slot(knot, from, to)];
    }

    void validate(double tol = 1e-9) const {
        if (n_classes < 2) throw DataError("need at least two classes");
        if (proportions.size() != static_cast<std::size_t>(n_classes))
            throw DataError("proportions size does not match n_classes");
        double prop_sum = 0.0;
        for (double p : proportions) {
            if (!(p >= 0.0) || p > 1.0)
                throw DataError("proportion outside [0,1]");
            prop_sum += p;
        }
        if (std::abs(prop_sum - 1.0) > tol)
            throw DataError("proportions must sum to 1");
        if (knots.empty() || knots[0] != 0.0)
            throw DataError("first knot must be lag 0");
        for (std::size_t k = 1; k < knots.size(); ++k)
            if (!(knots[k] > knots[k - 1]))
                throw DataError("knots must increase strictly");
        if (values.size() != knots.size() * n_classes * n_classes)
            throw DataError("value table does not match knots and classes");
        for (double v : values) {
            if (std::isnan(v) || v < 0.0)
                throw DataError("negative transition probability");
            if (v > 1.0 + tol)
                throw DataError("transition probability above 1");
        }
        for (int i = 1; i <= n_classes; ++i)
            for (int j = 1; j <= n_classes; ++j) {
                const double head = value_at_knot(0, i, j);
                if (std::abs(head - (i == j ? 1.0 : 0.0)) > tol)
                    throw DataError("lag-0 knot must be the identity");
            }
        for (std::size_t k = 0; k < knots.size(); ++k)
            for (int i = 1; i <= n_classes; ++i) {
                double row = 0.0;
                for (int j = 1; j <= n_classes; ++j)
                    row += value_at_knot(static_cast<int>(k), i, j);
                if (std::abs(row - 1.0) > tol)
                    throw DataError("row sum off 1 at knot " + std::to_string(k));
            }
    }

    // Segment lookup shared by the query paths. Returns (knot index, weight
    // of the next knot); lags past the last knot pin to it with weight 0.
    std::pair<int, double> segment(double lag) const {
        if (!(lag >= 0.0)) throw DataError("lag must be non-negative");
        if (lag >= knots.back()) return {static_cast<int>(knots.size()) - 1, 0.0};
        const auto it = std::upper_bound(knots.begin(), knots.end(), lag);
        const int k = static_cast<int>(it - knots.begin()) - 1;
        const double t = (lag - knots[k]) / (knots[k + 1] - knots[k]);
        return {k, t};
    }

    double query(int from, int to, double lag) const {
        const auto [k, t] = segment(lag);
        const double v0 = value_at_knot(k, from, to);
        if (t == 0.0) return v0;
        return v0 + t * (value_at_knot(k + 1, from, to) - v0);
    }

    // p(from, j, lag) for all j; out.size() == n_classes.
    void row_at(int from, double lag, std::span<double> out) const {
        const auto [k, t] = segment(lag);
        for (int j = 1; j <= n_classes; ++j) {
            const double v0 = value_at_knot(k, from, j);
            out[j - 1] = t == 0.0
                             ? v0
                             : v0 + t * (value_at_knot(k + 1, from, j) - v0);
        }
    }

    // p(i, to, lag) for all i; out.size() == n_classes.
    void col_at(int to, double lag, std::span<double> out) const {
        const auto [k, t] = segment(lag);
        for (int i = 1; i <= n_classes; ++i) {
            const double v0 = value_at_knot(k, i, to);
            out[i - 1] = t == 0.0
                             ? v0
                             : v0 + t * (value_at_knot(k + 1, i, to) - v0);
        }
    }
};

// Builds a model from experimental frequencies: one knot per lag center
// that any class populated, the identity head at lag 0, and per-class
// linear interpolation across that class's own empty bins. Rows are
// renormalized at each knot.
inline TransiogramModel fit_linear(const ExperimentalTransiograms& experimental,
                                   const std::vector<double>& proportions) {
    const int n = experimental.n_classes;
    if (n < 2) throw DataError("need at least two classes");
    if (proportions.size() != static_cast<std::size_t>(n))
        throw DataError("proportions size does not match n_classes");

    // Per-class knot lists over that class's populated bins, identity first.
    std::vector<std::vector<double>> row_lags(n);
    std::vector<std::vector<std::vector<double>>> row_vals(n);
    const int bins = static_cast<int>(experimental.lag_centers.size());
    for (int i = 1; i <= n; ++i) {
        auto& lags = row_lags[i - 1];
        auto& vals = row_vals[i - 1];
        lags.push_back(0.0);
        std::vector<double> identity(n, 0.0);
        identity[i - 1] = 1.0;
        vals.push_back(identity);
        for (int b = 0; b < bins; ++b) {
            if (!experimental.defined(b, i)) continue;
            std::vector<double> row(n);
            for (int j = 1; j <= n; ++j) row[j - 1] = experimental.prob(b, i, j);
            lags.push_back(experimental.lag_centers[b]);
            vals.push_back(row);
        }
        if (lags.size() < 2)
            throw DataError("class " + std::to_string(i) +
                            " has no populated lag bins");
    }

    std::vector<double> knots{0.0};
    for (int b = 0; b < bins; ++b) {
        bool populated = false;
        for (int i = 1; i <= n && !populated; ++i)
            populated = experimental.defined(b, i);
        if (populated) knots.push_back(experimental.lag_centers[b]);
    }

    TransiogramModel model;
    model.n_classes = n;
    model.proportions = proportions;
    model.knots = knots;
    model.values.resize(knots.size() * n * n);

    for (std::size_t k = 0; k < knots.size(); ++k) {
        const double h = knots[k];
        for (int i = 1; i <= n; ++i) {
            const auto& lags = row_lags[i - 1];
            const auto& vals = row_vals[i - 1];
            std::vector<double> row(n);
            if (h >= lags.back()) {
                row = vals.back();
            } else {
                const auto it = std::upper_bound(lags.begin(), lags.end(), h);
                const int s = static_cast<int>(it - lags.begin()) - 1;
                const double t = (h - lags[s]) / (lags[s + 1] - lags[s]);
                for (int j = 0; j < n; ++j)
                    row[j] = vals[s][j] + t * (vals[s + 1][j] - vals[s][j]);
            }
            double sum = 0.0;
            for (double v : row) sum += v;
            for (int j = 1; j <= n; ++j)
                model.values[model.slot(static_cast<int>(k), i, j)] = row[j - 1] / sum;
        }
    }
    model.validate(1e-9);
    return model;
}

// Exponential-decay model satisfying detailed balance exactly:
//   p_ij(h) = [i==j] e(h) + p_j (1 - e(h)),  e(h) = exp(-h / range)
// sampled densely enough (range/8 steps out to 30 ranges) that the
// piecewise-linear storage keeps p_i p_ij(h) == p_j p_ji(h) at every lag,
// since that identity is linear in e and survives interpolation.
inline TransiogramModel make_detailed_balance_model(
    const std::vector<double>& proportions, double range) {
    if (!(range > 0.0)) throw DataError("range must be positive");
    const int n = static_cast<int>(proportions.size());

    TransiogramModel model;
    model.n_classes = n;
    model.proportions = proportions;
    const int steps = 240;
    for (int s = 0; s <= steps; ++s) model.knots.push_back(s * (range / 8.0));
    model.values.resize(model.knots.size() * n * n);
    for (std::size_t k = 0; k < model.knots.size(); ++k) {
        const double e = std::exp(-model.knots[k] / range);
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                model.values[model.slot(static_cast<int>(k), i, j)] =
                    (i == j ? e : 0.0) + proportions[j - 1] * (1.0 - e);
    }
    model.validate(1e-9);
    return model;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view token, const char* what) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError(std::string("expected number ") + what + ", got '" +
                        std::string(token) + "'");
    return value;
}

inline std::vector<std::string_view> split_char(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::string model_column_header(int n) {
    std::string header = "lag";
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            header += ",p_" + std::to_string(i) + "_" + std::to_string(j);
    return header;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model CSV format
//
//   # n_classes=3 proportions=0.5;0.3;0.2
//   lag,p_1_1,p_1_2,...,p_3_3
//   0,1,0,...
//   10,0.62,0.21,...
//
// Numbers carry 17 significant digits, so save/load round-trips are exact
// and a second save is byte-identical.
// ---------------------------------------------------------------------------

inline void write_model(std::ostream& out, const TransiogramModel& model) {
    model.validate(1e-6);
    out << "# n_classes=" << model.n_classes << " proportions=";
    for (int i = 0; i < model.n_classes; ++i) {
        if (i) out << ';';
        out << detail::format_double(model.proportions[i]);
    }
    out << '\n' << detail::model_column_header(model.n_classes) << '\n';
    for (std::size_t k = 0; k < model.knots.size(); ++k) {
        out << detail::format_double(model.knots[k]);
        for (int i = 1; i <= model.n_classes; ++i)
            for (int j = 1; j <= model.n_classes; ++j)
                out << ','
                    << detail::format_double(
                           model.value_at_knot(static_cast<int>(k), i, j));
        out << '\n';
    }
}

inline TransiogramModel read_model(std::istream& in) {
    std::string line;
    if (!detail::get_line(in, line))
        throw DataError("empty model file");
    const std::string_view prefix = "# n_classes=";
    if (!line.starts_with(prefix))
        throw DataError("model header must start with '# n_classes='");
    std::string_view rest = std::string_view(line).substr(prefix.size());
    const auto space = rest.find(' ');
    if (space == std::string_view::npos)
        throw DataError("model header missing proportions");
    TransiogramModel model;
    model.n_classes = detail::parse_int(rest.substr(0, space), "n_classes");
    std::string_view props = rest.substr(space + 1);
    const std::string_view props_key = "proportions=";
    if (!props.starts_with(props_key))
        throw DataError("model header missing 'proportions='");
    const auto fields = detail::split_char(props.substr(props_key.size()), ';');
    if (fields.size() != static_cast<std::size_t>(model.n_classes))
        throw DataError("proportion count does not match n_classes");
    for (auto f : fields)
        model.proportions.push_back(detail::parse_double(f, "proportion"));

    if (!detail::get_line(in, line))
        throw DataError("model missing column header");
    if (line != detail::model_column_header(model.n_classes))
        throw DataError("model column header does not match n_classes");

    const int n = model.n_classes;
    while (detail::get_line(in, line)) {
        if (line.empty()) continue;
        const auto fields2 = detail::split_char(line, ',');
        if (fields2.size() != static_cast<std::size_t>(1 + n * n))
            throw DataError("model row has wrong field count: " + line);
        model.knots.push_back(detail::parse_double(fields2[0], "lag"));
        for (int f = 1; f <= n * n; ++f)
            model.values.push_back(detail::parse_double(fields2[f], "probability"));
    }
    if (model.knots.empty()) throw DataError("model has no knot rows");
    model.validate(1e-6);
    return model;
}

inline TransiogramModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file: " + path);
    return read_model(in);
}

inline void save_model(const TransiogramModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path);
    write_model(out, model);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace mcrf
