#pragma once

// Block coarse-graining and amplitude binning: numeric series -> symbols.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "rte/detail/numeric.hpp"
#include "rte/error.hpp"

namespace rte {

using Symbol = std::uint32_t;

enum class BinningMode { EqualWidth, Quantile };

NLOHMANN_JSON_SERIALIZE_ENUM(BinningMode, {
    {BinningMode::EqualWidth, "width"},
    {BinningMode::Quantile, "quantile"},
})

/// N-1 strictly ascending amplitude edges splitting the value axis into N bins.
struct BinningSpec {
    BinningMode mode = BinningMode::EqualWidth;
    std::size_t alphabet_size = 3;
    std::vector<double> edges;

    void validate() const
    {
        detail::require(alphabet_size >= 2, "alphabet size must be at least 2");
        detail::require(edges.size() + 1 == alphabet_size, "binning needs exactly N-1 edges");
        for (std::size_t i = 0; i < edges.size(); ++i) {
            detail::require(std::isfinite(edges[i]), "bin edges must be finite");
            detail::require(i == 0 || edges[i - 1] < edges[i], "bin edges must be strictly ascending");
        }
    }

    /// Bin index of `value`; values on an edge go to the lower bin, values
    /// outside the fitted range clamp to the end bins.
    [[nodiscard]] Symbol symbol_of(double value) const
    {
        const auto it = std::lower_bound(edges.begin(), edges.end(), value);
        return static_cast<Symbol>(it - edges.begin());
    }

    friend bool operator==(const BinningSpec&, const BinningSpec&) = default;
};

inline void to_json(nlohmann::json& j, const BinningSpec& spec)
{
    j = nlohmann::json{{"mode", spec.mode}, {"N", spec.alphabet_size}, {"edges", spec.edges}};
}

inline void from_json(const nlohmann::json& j, BinningSpec& spec)
{
    j.at("mode").get_to(spec.mode);
    j.at("N").get_to(spec.alphabet_size);
    j.at("edges").get_to(spec.edges);
    spec.validate();
}

/// Where a symbol series came from; carried along for run metadata.
struct SymbolOrigin {
    std::string label;
    std::size_t block_size = 1;
    std::vector<double> edges;
};

/// Time-ordered symbols over {0, ..., N-1}.
class SymbolSeries {
public:
    SymbolSeries(std::vector<Symbol> symbols, std::size_t alphabet_size, SymbolOrigin origin = {})
        : symbols_(std::move(symbols)), alphabet_size_(alphabet_size), origin_(std::move(origin))
    {
        detail::require(alphabet_size_ >= 2, "alphabet size must be at least 2");
        for (Symbol s : symbols_)
            detail::require(s < alphabet_size_, "symbol " + std::to_string(s) + " outside alphabet of size "
                                                    + std::to_string(alphabet_size_));
    }

    [[nodiscard]] std::span<const Symbol> symbols() const noexcept { return symbols_; }
    [[nodiscard]] std::size_t size() const noexcept { return symbols_.size(); }
    [[nodiscard]] bool empty() const noexcept { return symbols_.empty(); }
    [[nodiscard]] std::size_t alphabet_size() const noexcept { return alphabet_size_; }
    [[nodiscard]] const SymbolOrigin& origin() const noexcept { return origin_; }
    [[nodiscard]] Symbol operator[](std::size_t i) const { return symbols_[i]; }

    /// Same symbols, different order or content, same alphabet and origin.
    [[nodiscard]] SymbolSeries with_symbols(std::vector<Symbol> symbols) const
    {
        return SymbolSeries(std::move(symbols), alphabet_size_, origin_);
    }

    friend bool operator==(const SymbolSeries& a, const SymbolSeries& b)
    {
        return a.alphabet_size_ == b.alphabet_size_ && a.symbols_ == b.symbols_;
    }

private:
    std::vector<Symbol> symbols_;
    std::size_t alphabet_size_;
    SymbolOrigin origin_;
};

/// Arithmetic mean of each disjoint block of `block_size` samples. A trailing
/// partial block is dropped.
inline std::vector<double> block_coarse_grain(std::span<const double> values, std::size_t block_size)
{
    detail::require(!values.empty(), "cannot coarse-grain an empty series");
    detail::require(block_size >= 1, "block size must be at least 1");
    if (block_size == 1) return {values.begin(), values.end()};

    std::vector<double> means;
    means.reserve(values.size() / block_size);
    for (std::size_t start = 0; start + block_size <= values.size(); start += block_size) {
        detail::CompensatedSum sum;
        for (std::size_t i = start; i < start + block_size; ++i) sum += values[i];
        means.push_back(sum.value() / static_cast<double>(block_size));
    }
    return means;
}

/// ln(p_t / p_{t-1}); one element shorter than the input.
inline std::vector<double> log_returns(std::span<const double> prices)
{
    detail::require(prices.size() >= 2, "log returns need at least two prices");
    std::vector<double> out;
    out.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        detail::require(prices[t - 1] > 0.0 && prices[t] > 0.0, "log returns need positive prices");
        out.push_back(std::log(prices[t] / prices[t - 1]));
    }
    return out;
}

/// Empirical quantile by linear interpolation between order statistics:
/// h = (n-1)p, result = v[floor h] + (h - floor h)(v[floor h + 1] - v[floor h]).
inline double empirical_quantile(std::span<const double> sorted, double p)
{
    detail::require(!sorted.empty(), "quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline BinningSpec fit_bins(std::span<const double> values, BinningMode mode, std::size_t alphabet_size)
{
    detail::require(alphabet_size >= 2, "alphabet size must be at least 2");
    detail::require(!values.empty(), "cannot fit bins to an empty series");
    for (double v : values) detail::require(std::isfinite(v), "cannot fit bins to non-finite values");

    BinningSpec spec{mode, alphabet_size, {}};
    spec.edges.reserve(alphabet_size - 1);
    const auto n = static_cast<double>(alphabet_size);

    if (mode == BinningMode::EqualWidth) {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        detail::require(*lo < *hi, "equal-width bins are undefined for a constant series");
        const double width = (*hi - *lo) / n;
        for (std::size_t k = 1; k < alphabet_size; ++k)
            spec.edges.push_back(*lo + width * static_cast<double>(k));
    } else {
        std::vector<double> sorted(values.begin(), values.end());
        std::sort(sorted.begin(), sorted.end());
        std::size_t distinct_count = 1;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] != sorted[i - 1]) ++distinct_count;
        detail::require(distinct_count >= alphabet_size,
                        "quantile bins need at least N distinct values");
        for (std::size_t k = 1; k < alphabet_size; ++k)
            spec.edges.push_back(empirical_quantile(sorted, static_cast<double>(k) / n));
        for (std::size_t i = 1; i < spec.edges.size(); ++i)
            detail::require(spec.edges[i - 1] < spec.edges[i],
                            "quantile edges collapse because of tied values; use equal-width bins");
    }
    return spec;
}

inline SymbolSeries symbolize(std::span<const double> values, const BinningSpec& spec,
                              SymbolOrigin origin = {})
{
    spec.validate();
    std::vector<Symbol> symbols;
    symbols.reserve(values.size());
    for (double v : values) {
        detail::require(!std::isnan(v), "cannot symbolize NaN");
        symbols.push_back(spec.symbol_of(v));
    }
    origin.edges = spec.edges;
    return SymbolSeries(std::move(symbols), spec.alphabet_size, std::move(origin));
}

/// Options for the full amplitude -> symbol pipeline.
struct SymbolizeOptions {
    std::size_t alphabet_size = 3;
    std::size_t block_size = 1;
    BinningMode mode = BinningMode::EqualWidth;
    bool log_returns = false;
};

/// Optional log-return transform, block coarse-graining, per-series bin fit,
/// and symbolization.
inline SymbolSeries symbolize_series(std::span<const double> values, const SymbolizeOptions& options,
                                     std::string label = {})
{
    std::vector<double> prepared = options.log_returns ? log_returns(values)
                                                       : std::vector<double>(values.begin(), values.end());
    prepared = block_coarse_grain(prepared, options.block_size);
    const auto spec = fit_bins(prepared, options.mode, options.alphabet_size);
    return symbolize(prepared, spec, SymbolOrigin{std::move(label), options.block_size, {}});
}

} // namespace rte
