#pragma once

// Shannon and Rényi transfer entropy T_{Y->X}(m, l) from symbol series.
//
// Window convention: for t = max(m, l), ..., L - 2 the estimator records
// (x_{t+1}, x_{t-m+1..t}, y_{t-l+1..t}), giving L - max(m, l) - 1 windows.
// A word is the base-N integer of its symbols with the oldest symbol most
// significant.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "rte/detail/numeric.hpp"
#include "rte/error.hpp"
#include "rte/infocore.hpp"
#include "rte/symbolize.hpp"

namespace rte {

using Word = std::uint64_t;

/// Target history length m and source history length l, in ticks.
struct HistorySpec {
    std::size_t m = 1;
    std::size_t l = 1;

    void validate() const { detail::require(m >= 1 && l >= 1, "history lengths m and l must be at least 1"); }
    [[nodiscard]] std::size_t span() const noexcept { return std::max(m, l); }

    friend bool operator==(const HistorySpec&, const HistorySpec&) = default;
};

/// One cell of the (future, X-word, Y-word) table.
struct WordCount {
    Symbol future = 0;
    Word x_word = 0;
    Word y_word = 0;
    double weight = 0.0;

    friend bool operator==(const WordCount&, const WordCount&) = default;
};

/// Empirical (or analytic) joint distribution over (x_{t+1}, X-word, Y-word).
///
/// Weights are counts for estimated tables and probabilities for analytic
/// ones; probabilities are always weight / total. Cells are kept sorted by
/// (x_word, y_word, future) and are unique.
class WordDistribution {
public:
    WordDistribution(std::size_t target_alphabet, std::size_t source_alphabet, HistorySpec history,
                     std::vector<WordCount> cells, std::size_t windows)
        : nx_(target_alphabet), ny_(source_alphabet), history_(history), cells_(std::move(cells)),
          windows_(windows)
    {
        history_.validate();
        detail::require(nx_ >= 2 && ny_ >= 2, "alphabet sizes must be at least 2");
        const Word x_words = detail::checked_pow(nx_, history_.m);
        const Word y_words = detail::checked_pow(ny_, history_.l);
        std::sort(cells_.begin(), cells_.end(), [](const WordCount& a, const WordCount& b) {
            return std::tie(a.x_word, a.y_word, a.future) < std::tie(b.x_word, b.y_word, b.future);
        });
        detail::CompensatedSum total;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const auto& c = cells_[i];
            detail::require(c.future < nx_ && c.x_word < x_words && c.y_word < y_words,
                            "word table cell outside the alphabet");
            detail::require(std::isfinite(c.weight) && c.weight >= 0.0, "word weights must be non-negative");
            detail::require(i == 0 || std::tie(cells_[i - 1].x_word, cells_[i - 1].y_word, cells_[i - 1].future)
                                          != std::tie(c.x_word, c.y_word, c.future),
                            "duplicate word table cell");
            total += c.weight;
        }
        total_ = total.value();
        detail::require(total_ > 0.0, "word table has no mass");
    }

    /// Analytic table whose weights are probabilities summing to 1.
    static WordDistribution from_probabilities(std::size_t target_alphabet, std::size_t source_alphabet,
                                               HistorySpec history, std::vector<WordCount> cells)
    {
        WordDistribution w(target_alphabet, source_alphabet, history, std::move(cells), 0);
        detail::require(std::abs(w.total_ - 1.0) <= kDistributionTolerance,
                        "analytic word probabilities must sum to 1");
        return w;
    }

    [[nodiscard]] std::size_t target_alphabet() const noexcept { return nx_; }
    [[nodiscard]] std::size_t source_alphabet() const noexcept { return ny_; }
    [[nodiscard]] const HistorySpec& history() const noexcept { return history_; }
    [[nodiscard]] const std::vector<WordCount>& cells() const noexcept { return cells_; }
    [[nodiscard]] double total() const noexcept { return total_; }
    /// Number of counted windows; 0 for analytic tables.
    [[nodiscard]] std::size_t windows() const noexcept { return windows_; }

    [[nodiscard]] double weight(Symbol future, Word x_word, Word y_word) const
    {
        const auto it = std::lower_bound(cells_.begin(), cells_.end(), std::tie(x_word, y_word, future),
                                         [](const WordCount& c, const auto& key) {
                                             return std::tie(c.x_word, c.y_word, c.future) < key;
                                         });
        if (it == cells_.end() || it->x_word != x_word || it->y_word != y_word || it->future != future)
            return 0.0;
        return it->weight;
    }

    /// p(x_{t+1}, X-word) with X-words relabelled densely in sorted order.
    [[nodiscard]] JointDistribution future_and_target_history() const
    {
        return grouped_joint([](const WordCount& a, const WordCount& b) { return a.x_word == b.x_word; });
    }

    /// p(x_{t+1}, (X-word, Y-word)) with joint words relabelled densely.
    [[nodiscard]] JointDistribution future_and_joint_history() const
    {
        return grouped_joint([](const WordCount& a, const WordCount& b) {
            return a.x_word == b.x_word && a.y_word == b.y_word;
        });
    }

private:
    template <typename SameGroup>
    [[nodiscard]] JointDistribution grouped_joint(SameGroup same_group) const
    {
        // Cells are sorted by (x_word, y_word, future), so each conditioning
        // group is a contiguous run.
        std::vector<std::size_t> group_of(cells_.size());
        std::size_t groups = 0;
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            if (i > 0 && !same_group(cells_[i - 1], cells_[i])) ++groups;
            group_of[i] = groups;
        }
        ++groups;
        std::vector<double> probs(nx_ * groups, 0.0);
        for (std::size_t i = 0; i < cells_.size(); ++i)
            probs[cells_[i].future * groups + group_of[i]] += cells_[i].weight / total_;
        return JointDistribution({nx_, groups}, std::move(probs));
    }

    std::size_t nx_;
    std::size_t ny_;
    HistorySpec history_;
    std::vector<WordCount> cells_;
    std::size_t windows_;
    double total_ = 0.0;
};

struct CountOptions {
    /// Added to every cell of the full (future, X-word, Y-word) grid. Off by default.
    double pseudo_count = 0.0;
};

namespace detail {

inline constexpr std::uint64_t kDenseCountLimit = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kPseudoCountGridLimit = std::uint64_t{1} << 24;

} // namespace detail

/// Slides the (future, target history, source history) window over an
/// aligned pair. x is the target, y the source.
inline WordDistribution count_words(const SymbolSeries& x, const SymbolSeries& y, HistorySpec h,
                                    CountOptions options = {})
{
    h.validate();
    detail::require(x.size() == y.size(), "target and source series must have equal length (got "
                                              + std::to_string(x.size()) + " and " + std::to_string(y.size())
                                              + ")");
    const std::size_t length = x.size();
    const std::size_t first = h.span();
    detail::require(length > first + 1, "series of length " + std::to_string(length)
                                            + " is too short for m=" + std::to_string(h.m)
                                            + ", l=" + std::to_string(h.l) + " (no windows)");
    detail::require(std::isfinite(options.pseudo_count) && options.pseudo_count >= 0.0,
                    "pseudo-count must be non-negative");

    const std::size_t nx = x.alphabet_size();
    const std::size_t ny = y.alphabet_size();
    const Word x_words = detail::checked_pow(nx, h.m);
    const Word y_words = detail::checked_pow(ny, h.l);
    const std::size_t windows = length - first - 1;

    const auto xs = x.symbols();
    const auto ys = y.symbols();
    auto word_ending_at = [](std::span<const Symbol> s, std::size_t end, std::size_t len, std::size_t base) {
        Word w = 0;
        for (std::size_t i = end + 1 - len; i <= end; ++i) w = w * base + s[i];
        return w;
    };

    // Words at t = first; later windows roll forward by one symbol.
    Word xw = word_ending_at(xs, first, h.m, nx);
    Word yw = word_ending_at(ys, first, h.l, ny);
    auto advance = [&](std::size_t t) {
        xw = (xw * nx + xs[t]) % x_words;
        yw = (yw * ny + ys[t]) % y_words;
    };

    const bool grid_fits = x_words <= detail::kPseudoCountGridLimit / nx
                        && x_words * nx <= detail::kPseudoCountGridLimit / y_words;
    const std::uint64_t grid = grid_fits ? x_words * y_words * nx : 0;
    detail::require(options.pseudo_count == 0.0 || grid_fits,
                    "pseudo-counts need a word grid of at most 2^24 cells");

    std::vector<WordCount> cells;
    if (grid_fits && (options.pseudo_count > 0.0 || grid <= detail::kDenseCountLimit)) {
        std::vector<std::uint64_t> counts(grid, 0);
        for (std::size_t t = first;; ) {
            ++counts[(xw * y_words + yw) * nx + xs[t + 1]];
            if (++t > length - 2) break;
            advance(t);
        }
        for (std::uint64_t i = 0; i < grid; ++i) {
            const double weight = static_cast<double>(counts[i]) + options.pseudo_count;
            if (weight > 0.0)
                cells.push_back({static_cast<Symbol>(i % nx), (i / nx) / y_words, (i / nx) % y_words, weight});
        }
    } else {
        std::vector<std::tuple<Word, Word, Symbol>> keys;
        keys.reserve(windows);
        for (std::size_t t = first;;) {
            keys.emplace_back(xw, yw, xs[t + 1]);
            if (++t > length - 2) break;
            advance(t);
        }
        std::sort(keys.begin(), keys.end());
        for (std::size_t i = 0; i < keys.size();) {
            std::size_t j = i;
            while (j < keys.size() && keys[j] == keys[i]) ++j;
            const auto& [kx, ky, kf] = keys[i];
            cells.push_back({kf, kx, ky, static_cast<double>(j - i)});
            i = j;
        }
    }
    return WordDistribution(nx, ny, h, std::move(cells), windows);
}

/// Raw transfer entropy estimate with the parameters that produced it.
struct TransferResult {
    double value = 0.0;
    double q = 1.0;
    HistorySpec history;
    std::size_t alphabet_size = 0;
    std::size_t windows = 0;
    std::string direction;
};

namespace detail {

inline std::string direction_label(const SymbolSeries& target, const SymbolSeries& source)
{
    const auto& s = source.origin().label;
    const auto& t = target.origin().label;
    return (s.empty() ? std::string("Y") : s) + "->" + (t.empty() ? std::string("X") : t);
}

} // namespace detail

/// Shannon transfer entropy
///   T = sum p(x', xw, yw) log2[ p(x' | xw, yw) / p(x' | xw) ]
/// over observed cells only.
inline TransferResult shannon_transfer_entropy(const WordDistribution& w)
{
    const auto& cells = w.cells();
    const std::size_t nx = w.target_alphabet();
    detail::CompensatedSum acc;

    // Cells are sorted by X-word first, so each X-word is one contiguous run;
    // within it, (X-word, Y-word) groups are contiguous sub-runs.
    for (std::size_t begin = 0; begin < cells.size();) {
        std::size_t end = begin;
        double x_mass = 0.0;
        std::vector<double> future_mass(nx, 0.0);
        while (end < cells.size() && cells[end].x_word == cells[begin].x_word) {
            x_mass += cells[end].weight;
            future_mass[cells[end].future] += cells[end].weight;
            ++end;
        }
        for (std::size_t g = begin; g < end;) {
            std::size_t h = g;
            double xy_mass = 0.0;
            while (h < end && cells[h].y_word == cells[g].y_word) xy_mass += cells[h++].weight;
            for (std::size_t i = g; i < h; ++i) {
                const double c = cells[i].weight;
                if (c <= 0.0) continue;
                acc += c * std::log2((c * x_mass) / (xy_mass * future_mass[cells[i].future]));
            }
            g = h;
        }
        begin = end;
    }
    return TransferResult{acc.value() / w.total(), 1.0, w.history(), nx, w.windows(), {}};
}

/// Rényi transfer entropy S_q(X' | X-hist) - S_q(X' | X-hist ∩ Y-hist).
/// May be negative for q != 1; equals the Shannon estimate at q = 1.
inline TransferResult renyi_transfer_entropy(const WordDistribution& w, RenyiOrder q)
{
    const double value = conditional_entropy(w.future_and_target_history(), q)
                       - conditional_entropy(w.future_and_joint_history(), q);
    return TransferResult{value, q.value(), w.history(), w.target_alphabet(), w.windows(), {}};
}

/// Estimates T_{q; Y->X}(m, l) for target x and source y.
inline TransferResult transfer_entropy(const SymbolSeries& x, const SymbolSeries& y, HistorySpec h,
                                       RenyiOrder q, CountOptions options = {})
{
    const auto words = count_words(x, y, h, options);
    auto result = q.is_shannon() ? shannon_transfer_entropy(words) : renyi_transfer_entropy(words, q);
    result.q = q.value();
    result.direction = detail::direction_label(x, y);
    return result;
}

inline std::string format_word(Word word, std::size_t length, std::size_t base)
{
    std::string out(length, '0');
    for (std::size_t i = length; i-- > 0;) {
        const auto digit = static_cast<unsigned>(word % base);
        word /= base;
        out[i] = digit < 10 ? static_cast<char>('0' + digit) : static_cast<char>('a' + digit - 10);
    }
    return out;
}

/// Diagnostic dump: one row per observed cell. Not a stable format.
inline void write_word_csv(std::ostream& out, const WordDistribution& w)
{
    out << "future,x_word,y_word,count\n";
    for (const auto& c : w.cells()) {
        out << c.future << ',' << format_word(c.x_word, w.history().m, w.target_alphabet()) << ','
            << format_word(c.y_word, w.history().l, w.source_alphabet()) << ',' << c.weight << '\n';
    }
}

} // namespace rte
