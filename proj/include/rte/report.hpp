#pragma once

// Pairwise flow matrices, net flows, q- and m-sweeps, and their CSV / JSON /
// SVG renderings.
//
// Orientation: rows are targets (receivers), columns are sources, so
// matrix[i][j] = T(label_j -> label_i). The diagonal is undefined.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rte/detail/parallel.hpp"
#include "rte/detail/random.hpp"
#include "rte/error.hpp"
#include "rte/ingest.hpp"
#include "rte/surrogate.hpp"
#include "rte/transfer.hpp"

namespace rte {

struct AnalysisParams {
    double q = 1.0;
    HistorySpec history;
    std::size_t alphabet_size = 0;
    SurrogateSpec surrogates;
};

inline void to_json(nlohmann::json& j, const AnalysisParams& p)
{
    j = nlohmann::json{{"q", p.q}, {"m", p.history.m}, {"l", p.history.l}, {"N", p.alphabet_size},
                       {"surrogates", p.surrogates}};
}

struct FlowCell {
    double effective = 0.0;
    double raw = 0.0;
    double surrogate_mean = 0.0;
    double surrogate_std = 0.0;
};

struct FlowMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<std::optional<FlowCell>>> cells; // [target][source]
    AnalysisParams params;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }

    /// Effective T(source -> target); empty on the diagonal.
    [[nodiscard]] std::optional<double> value(std::size_t target, std::size_t source) const
    {
        const auto& c = cells.at(target).at(source);
        return c ? std::optional<double>(c->effective) : std::nullopt;
    }
};

struct NetFlowMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> values; // F[i][j] = T(j -> i) - T(i -> j)
    AnalysisParams params;
};

namespace detail {

inline std::vector<std::string> series_labels(const std::vector<SymbolSeries>& series)
{
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& l = series[i].origin().label;
        labels.push_back(l.empty() ? "S" + std::to_string(i + 1) : l);
    }
    return labels;
}

} // namespace detail

/// Effective TE for every ordered pair (source != target). Each pair draws its
/// surrogates from its own stream derived from (seed, target, source), and
/// results are stored by pair index, so thread count never changes the output.
/// If `pair_seconds` is given it receives the wall time of each pair, indexed
/// target * n + source.
inline FlowMatrix pairwise_matrix(const std::vector<SymbolSeries>& series, HistorySpec h, RenyiOrder q,
                                  const SurrogateSpec& spec, CountOptions options = {},
                                  std::vector<double>* pair_seconds = nullptr)
{
    detail::require(series.size() >= 2, "a flow matrix needs at least two series");
    for (const auto& s : series)
        detail::require(s.size() == series.front().size(), "all series must have equal length after alignment");
    const auto labels = detail::series_labels(series);
    detail::require(std::set<std::string>(labels.begin(), labels.end()).size() == labels.size(),
                    "series labels must be unique");

    const std::size_t n = series.size();
    FlowMatrix out;
    out.labels = labels;
    out.cells.assign(n, std::vector<std::optional<FlowCell>>(n));
    out.params = AnalysisParams{q.value(), h, series.front().alphabet_size(), spec};

    SurrogateSpec pair_spec = spec;
    pair_spec.threads = 1;
    if (pair_seconds) pair_seconds->assign(n * n, 0.0);
    detail::parallel_for(n * n, spec.threads, [&](std::size_t index) {
        const std::size_t target = index / n;
        const std::size_t source = index % n;
        if (target == source) return;
        SurrogateSpec local = pair_spec;
        local.seed = detail::stream_seed(spec.seed, index);
        const auto start = std::chrono::steady_clock::now();
        try {
            const auto r = effective_transfer_entropy(series[target], series[source], h, q, local, options);
            out.cells[target][source] = FlowCell{r.effective, r.raw.value, r.surrogate_mean, r.surrogate_std};
        } catch (const std::exception& e) {
            throw ValidationError("pair " + labels[source] + "->" + labels[target] + ": " + e.what());
        }
        if (pair_seconds)
            (*pair_seconds)[index] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });
    return out;
}

/// F[i][j] = M[i][j] - M[j][i]; exactly antisymmetric with zero diagonal.
inline NetFlowMatrix net_flow(const FlowMatrix& m)
{
    const std::size_t n = m.size();
    detail::require(m.cells.size() == n, "flow matrix must be square");
    for (const auto& row : m.cells) detail::require(row.size() == n, "flow matrix must be square");
    NetFlowMatrix out{m.labels, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)), m.params};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = m.value(i, j).value_or(0.0) - m.value(j, i).value_or(0.0);
            out.values[i][j] = d;
            out.values[j][i] = -d;
        }
    }
    return out;
}

struct SweepRow {
    double q = 1.0;
    HistorySpec history;
    std::string direction;
    EffectiveResult result;
    bool sparse = false; // fewer windows than the configured floor
};

/// ERTE in both directions (y->x and x->y) for every q in the grid. No
/// monotonicity in q is assumed.
inline std::vector<SweepRow> q_sweep(const SymbolSeries& x, const SymbolSeries& y, HistorySpec h,
                                     const std::vector<double>& q_grid, const SurrogateSpec& spec,
                                     CountOptions options = {})
{
    detail::require(!q_grid.empty(), "q grid must not be empty");
    std::vector<SweepRow> rows;
    for (double qv : q_grid) {
        const RenyiOrder q(qv);
        auto forward = effective_transfer_entropy(x, y, h, q, spec, options);
        auto backward = effective_transfer_entropy(y, x, h, q, spec, options);
        rows.push_back({qv, h, forward.raw.direction, std::move(forward), false});
        rows.push_back({qv, h, backward.raw.direction, std::move(backward), false});
    }
    return rows;
}

struct MSweepOptions {
    /// A row is flagged sparse when windows < windows_per_cell * N^(m+l+1).
    double windows_per_cell = 5.0;
    CountOptions count;
};

/// T_q(m, m) for every m in the grid (l = m), source y, target x.
inline std::vector<SweepRow> m_sweep(const SymbolSeries& x, const SymbolSeries& y,
                                     const std::vector<std::size_t>& m_grid, RenyiOrder q,
                                     const SurrogateSpec& spec, MSweepOptions options = {})
{
    detail::require(!m_grid.empty(), "m grid must not be empty");
    std::vector<SweepRow> rows;
    for (std::size_t m : m_grid) {
        const HistorySpec h{m, m};
        auto r = effective_transfer_entropy(x, y, h, q, spec, options.count);
        const double cells = std::pow(static_cast<double>(x.alphabet_size()), static_cast<double>(m + 1))
                           * std::pow(static_cast<double>(y.alphabet_size()), static_cast<double>(m));
        const bool sparse = static_cast<double>(r.raw.windows) < options.windows_per_cell * cells;
        rows.push_back({q.value(), h, r.raw.direction, std::move(r), sparse});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Emitters

/// 12 significant digits, "%.12g".
inline std::string format_value(double v)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.12g", v);
    return buffer;
}

namespace detail {

inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline nlohmann::json effective_json(const EffectiveResult& r)
{
    return {{"direction", r.raw.direction}, {"raw", r.raw.value}, {"surrogate_mean", r.surrogate_mean},
            {"surrogate_std", r.surrogate_std}, {"effective", r.effective}, {"windows", r.raw.windows},
            {"q", r.raw.q}, {"m", r.raw.history.m}, {"l", r.raw.history.l}, {"N", r.raw.alphabet_size}};
}

} // namespace detail

inline void write_csv(std::ostream& out, const FlowMatrix& m)
{
    out << "target\\source";
    for (const auto& l : m.labels) out << ',' << detail::csv_field(l);
    out << "\r\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << detail::csv_field(m.labels[i]);
        for (std::size_t j = 0; j < m.size(); ++j) {
            out << ',';
            if (const auto v = m.value(i, j)) out << format_value(*v);
        }
        out << "\r\n";
    }
}

inline void write_csv(std::ostream& out, const NetFlowMatrix& f)
{
    out << "target\\source";
    for (const auto& l : f.labels) out << ',' << detail::csv_field(l);
    out << "\r\n";
    for (std::size_t i = 0; i < f.labels.size(); ++i) {
        out << detail::csv_field(f.labels[i]);
        for (double v : f.values[i]) out << ',' << format_value(v);
        out << "\r\n";
    }
}

inline void write_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "q,m,l,direction,raw,surrogate_mean,surrogate_std,effective,windows,sparse\r\n";
    for (const auto& row : rows) {
        const auto& r = row.result;
        out << format_value(row.q) << ',' << row.history.m << ',' << row.history.l << ','
            << detail::csv_field(row.direction) << ',' << format_value(r.raw.value) << ','
            << format_value(r.surrogate_mean) << ',' << format_value(r.surrogate_std) << ','
            << format_value(r.effective) << ',' << r.raw.windows << ',' << (row.sparse ? 1 : 0) << "\r\n";
    }
}

inline nlohmann::json to_json_value(const FlowMatrix& m)
{
    auto grid = [&](auto field) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : m.cells) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& c : row) r.push_back(c ? nlohmann::json(field(*c)) : nlohmann::json(nullptr));
            rows.push_back(std::move(r));
        }
        return rows;
    };
    return {{"kind", "flow_matrix"},
            {"orientation", "rows=target, columns=source"},
            {"labels", m.labels},
            {"parameters", m.params},
            {"effective", grid([](const FlowCell& c) { return c.effective; })},
            {"raw", grid([](const FlowCell& c) { return c.raw; })},
            {"surrogate_mean", grid([](const FlowCell& c) { return c.surrogate_mean; })},
            {"surrogate_std", grid([](const FlowCell& c) { return c.surrogate_std; })}};
}

inline nlohmann::json to_json_value(const NetFlowMatrix& f)
{
    return {{"kind", "net_flow"},
            {"orientation", "F[i][j] = T(j->i) - T(i->j)"},
            {"labels", f.labels},
            {"parameters", f.params},
            {"values", f.values}};
}

inline nlohmann::json to_json_value(const std::vector<SweepRow>& rows)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : rows) {
        auto j = detail::effective_json(row.result);
        j["sparse"] = row.sparse;
        out.push_back(std::move(j));
    }
    return {{"kind", "sweep"}, {"rows", out}};
}

/// Parses a flow-matrix CSV written by write_csv. Only effective values are
/// recovered.
inline FlowMatrix read_flow_matrix_csv(std::istream& in)
{
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), "flow matrix CSV is empty");
    auto header = detail::split_csv_record(std::string(detail::trim(line)));
    detail::require(header.size() >= 3, "flow matrix CSV needs at least two labels");
    FlowMatrix m;
    m.labels.assign(header.begin() + 1, header.end());
    const std::size_t n = m.labels.size();
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        auto fields = detail::split_csv_record(std::string(detail::trim(line)));
        detail::require(fields.size() == n + 1, "flow matrix CSV row has the wrong number of fields");
        const std::size_t i = m.cells.size();
        detail::require(i < n && fields[0] == m.labels[i], "flow matrix CSV rows must follow the header order");
        std::vector<std::optional<FlowCell>> row(n);
        for (std::size_t j = 0; j < n; ++j) {
            if (detail::trim(fields[j + 1]).empty()) continue;
            double v = 0.0;
            detail::require(detail::parse_number(fields[j + 1], v), "flow matrix CSV has a non-numeric cell");
            row[j] = FlowCell{v, v, 0.0, 0.0};
        }
        m.cells.push_back(std::move(row));
    }
    detail::require(m.cells.size() == n, "flow matrix CSV must be square");
    return m;
}

// SVG heat maps. The flow matrix uses a sequential white-to-navy scale from
// the minimum to the maximum off-diagonal value; the net flow uses a
// diverging blue-white-red scale over [-max|F|, +max|F|] centred at zero.

namespace detail {

struct Rgb {
    double r, g, b;
};

inline Rgb lerp(Rgb a, Rgb b, double t)
{
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

inline std::string hex(Rgb c)
{
    char buffer[8];
    auto channel = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", channel(c.r), channel(c.g), channel(c.b));
    return buffer;
}

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

template <typename ColorOf>
void write_heatmap(std::ostream& out, const std::vector<std::string>& labels,
                   const std::vector<std::vector<std::optional<double>>>& grid, ColorOf color_of,
                   const std::string& title, const std::string& scale_note)
{
    const int cell = 40;
    const int margin = 110;
    const int n = static_cast<int>(labels.size());
    const int width = margin + n * cell + 20;
    const int height = margin + n * cell + 60;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<text x=\"10\" y=\"18\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
    for (int j = 0; j < n; ++j)
        out << "<text x=\"" << margin + j * cell + cell / 2 << "\" y=\"" << margin - 8
            << "\" text-anchor=\"end\" transform=\"rotate(-45 " << margin + j * cell + cell / 2 << ' '
            << margin - 8 << ")\">" << xml_escape(labels[j]) << "</text>\n";
    for (int i = 0; i < n; ++i) {
        out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + i * cell + cell / 2 + 4
            << "\" text-anchor=\"end\">" << xml_escape(labels[i]) << "</text>\n";
        for (int j = 0; j < n; ++j) {
            const auto& v = grid[i][j];
            out << "<rect x=\"" << margin + j * cell << "\" y=\"" << margin + i * cell << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << (v ? hex(color_of(*v)) : std::string("none"))
                << "\" stroke=\"#cccccc\"><title>" << xml_escape(labels[j]) << " -&gt; " << xml_escape(labels[i])
                << ": " << (v ? format_value(*v) : std::string("n/a")) << "</title></rect>\n";
        }
    }
    out << "<text x=\"10\" y=\"" << margin + n * cell + 30 << "\">rows: target, columns: source. "
        << xml_escape(scale_note) << "</text>\n";
    out << "</svg>\n";
}

} // namespace detail

inline void write_svg(std::ostream& out, const FlowMatrix& m)
{
    std::vector<std::vector<std::optional<double>>> grid(m.size(), std::vector<std::optional<double>>(m.size()));
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if ((grid[i][j] = m.value(i, j))) {
                lo = std::min(lo, *grid[i][j]);
                hi = std::max(hi, *grid[i][j]);
            }
    const detail::Rgb white{1, 1, 1}, navy{0.03, 0.19, 0.42};
    auto color = [&](double v) { return detail::lerp(white, navy, hi > lo ? (v - lo) / (hi - lo) : 0.5); };
    detail::write_heatmap(out, m.labels, grid, color, "Effective transfer entropy (bits)",
                          "linear scale white=min " + format_value(lo) + ", navy=max " + format_value(hi));
}

inline void write_svg(std::ostream& out, const NetFlowMatrix& f)
{
    const std::size_t n = f.labels.size();
    std::vector<std::vector<std::optional<double>>> grid(n, std::vector<std::optional<double>>(n));
    double extent = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) grid[i][j] = f.values[i][j];
            extent = std::max(extent, std::abs(f.values[i][j]));
            lo = std::min(lo, f.values[i][j]);
            hi = std::max(hi, f.values[i][j]);
        }
    const detail::Rgb blue{0.13, 0.40, 0.67}, white{1, 1, 1}, red{0.70, 0.09, 0.17};
    auto color = [&](double v) {
        if (extent == 0.0) return white;
        const double t = v / extent;
        return t < 0 ? detail::lerp(white, blue, -t) : detail::lerp(white, red, t);
    };
    detail::write_heatmap(out, f.labels, grid, color, "Net information flow (bits)",
                          "diverging scale centred at 0, blue=-" + format_value(extent) + ", red=+"
                              + format_value(extent) + "; min " + format_value(lo) + ", max " + format_value(hi));
}

} // namespace rte
