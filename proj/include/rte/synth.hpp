#pragma once

// Coupled discrete Markov processes with exactly computable transfer entropy.
//
// The source Y is a first-order chain with transition matrix A[y][y']. The
// target X has order k: x_{t+1} is drawn from B[s][x'], where s encodes the
// last k symbols of both X and Y as s = xword * N^k + yword (words are base-N,
// oldest symbol most significant). For k = 1 this is simply B[x * N + y][x'].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "rte/detail/numeric.hpp"
#include "rte/detail/random.hpp"
#include "rte/error.hpp"
#include "rte/infocore.hpp"
#include "rte/symbolize.hpp"
#include "rte/transfer.hpp"

namespace rte {

struct CoupledMarkovSpec {
    std::size_t alphabet_size = 2;
    std::size_t order = 1;
    std::vector<std::vector<double>> source_transition; // N rows
    std::vector<std::vector<double>> target_transition; // N^(2k) rows
    std::vector<double> initial_source;
    std::vector<double> initial_target;

    [[nodiscard]] std::size_t history_words() const { return detail::checked_pow(alphabet_size, order); }

    void validate() const
    {
        detail::require(alphabet_size >= 2, "synthetic alphabet size must be at least 2");
        detail::require(order >= 1, "target order must be at least 1");
        const std::size_t n = alphabet_size;
        auto check_row = [n](const std::vector<double>& row, const std::string& what) {
            detail::require(row.size() == n, what + " must have N entries");
            detail::CompensatedSum sum;
            for (double p : row) {
                detail::require(std::isfinite(p) && p >= 0.0, what + " has a negative entry");
                sum += p;
            }
            detail::require(std::abs(sum.value() - 1.0) <= kDistributionTolerance, what + " does not sum to 1");
        };
        detail::require(source_transition.size() == n, "source transition needs N rows");
        for (const auto& row : source_transition) check_row(row, "source transition row");
        const std::size_t words = history_words();
        detail::require(target_transition.size() == words * words, "target transition needs N^(2k) rows");
        for (const auto& row : target_transition) check_row(row, "target transition row");
        check_row(initial_source, "initial source distribution");
        check_row(initial_target, "initial target distribution");
    }
};

inline void to_json(nlohmann::json& j, const CoupledMarkovSpec& s)
{
    j = nlohmann::json{{"N", s.alphabet_size},
                       {"order", s.order},
                       {"source_transition", s.source_transition},
                       {"target_transition", s.target_transition},
                       {"initial_source", s.initial_source},
                       {"initial_target", s.initial_target}};
}

inline void from_json(const nlohmann::json& j, CoupledMarkovSpec& s)
{
    try {
        j.at("N").get_to(s.alphabet_size);
        s.order = j.value("order", std::size_t{1});
        j.at("source_transition").get_to(s.source_transition);
        j.at("target_transition").get_to(s.target_transition);
        const std::vector<double> uniform(s.alphabet_size, 1.0 / static_cast<double>(s.alphabet_size));
        s.initial_source = j.value("initial_source", uniform);
        s.initial_target = j.value("initial_target", uniform);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
    }
    s.validate();
}

inline CoupledMarkovSpec load_coupled_spec(const std::string& path)
{
    std::ifstream in(path);
    detail::require(static_cast<bool>(in), "cannot open synthetic spec " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse synthetic spec " + path + ": " + e.what());
    }
    return j.get<CoupledMarkovSpec>();
}

/// i.i.d. uniform source; x_{t+1} = y_t with probability `fidelity`, any
/// other symbol uniformly otherwise. fidelity = 1 is the copy process.
inline CoupledMarkovSpec noisy_copy_spec(std::size_t alphabet_size, double fidelity = 1.0)
{
    const std::size_t n = alphabet_size;
    const double uniform = 1.0 / static_cast<double>(n);
    const double miss = n > 1 ? (1.0 - fidelity) / static_cast<double>(n - 1) : 0.0;
    CoupledMarkovSpec s;
    s.alphabet_size = n;
    s.source_transition.assign(n, std::vector<double>(n, uniform));
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y) {
            std::vector<double> row(n, miss);
            row[y] = fidelity;
            s.target_transition.push_back(row);
        }
    s.initial_source.assign(n, uniform);
    s.initial_target.assign(n, uniform);
    s.validate();
    return s;
}

/// Source and target evolve independently: Y by `source`, X by `target`
/// (rows indexed by the current symbol).
inline CoupledMarkovSpec independent_spec(const std::vector<std::vector<double>>& source,
                                          const std::vector<std::vector<double>>& target)
{
    CoupledMarkovSpec s;
    s.alphabet_size = source.size();
    s.source_transition = source;
    for (std::size_t x = 0; x < target.size(); ++x)
        for (std::size_t y = 0; y < source.size(); ++y) s.target_transition.push_back(target[x]);
    const double uniform = 1.0 / static_cast<double>(s.alphabet_size);
    s.initial_source.assign(s.alphabet_size, uniform);
    s.initial_target.assign(s.alphabet_size, uniform);
    s.validate();
    return s;
}

struct GeneratedPair {
    SymbolSeries x; // target
    SymbolSeries y; // source
};

/// Simulates `length` ticks of the coupled chain. The first k target symbols
/// and the first source symbol come from the initial distributions.
inline GeneratedPair generate(const CoupledMarkovSpec& spec, std::size_t length, std::uint64_t seed)
{
    spec.validate();
    detail::require(length >= 2 && length >= spec.order, "synthetic series length must be at least max(2, order)");
    const std::size_t n = spec.alphabet_size;
    const std::size_t k = spec.order;
    const Word words = spec.history_words();

    std::mt19937_64 engine(detail::stream_seed(seed, 0));
    std::vector<Symbol> xs(length), ys(length);
    ys[0] = static_cast<Symbol>(detail::sample_categorical(spec.initial_source, engine));
    for (std::size_t t = 0; t < k; ++t)
        xs[t] = static_cast<Symbol>(detail::sample_categorical(spec.initial_target, engine));
    for (std::size_t t = 1; t < k; ++t)
        ys[t] = static_cast<Symbol>(detail::sample_categorical(spec.source_transition[ys[t - 1]], engine));

    Word xw = 0;
    Word yw = 0;
    for (std::size_t t = 0; t < k; ++t) {
        xw = xw * n + xs[t];
        yw = yw * n + ys[t];
    }
    for (std::size_t t = k - 1; t + 1 < length; ++t) {
        const auto& row = spec.target_transition[xw * words + yw];
        ys[t + 1] = static_cast<Symbol>(detail::sample_categorical(spec.source_transition[ys[t]], engine));
        xs[t + 1] = static_cast<Symbol>(detail::sample_categorical(row, engine));
        xw = (xw * n + xs[t + 1]) % words;
        yw = (yw * n + ys[t + 1]) % words;
    }
    return {SymbolSeries(std::move(xs), n, SymbolOrigin{"x", 1, {}}),
            SymbolSeries(std::move(ys), n, SymbolOrigin{"y", 1, {}})};
}

namespace detail {

inline constexpr double kStationaryTolerance = 1e-14;
inline constexpr std::size_t kStationaryMaxIterations = 1'000'000;
inline constexpr std::size_t kPathEnumerationLimit = std::size_t{1} << 24;

struct JointTransition {
    Word to;
    double p;
};

// Sparse transition lists of the joint chain on states (xword, yword).
inline std::vector<std::vector<JointTransition>> joint_transitions(const CoupledMarkovSpec& spec)
{
    const std::size_t n = spec.alphabet_size;
    const Word words = spec.history_words();
    std::vector<std::vector<JointTransition>> out(words * words);
    for (Word xw = 0; xw < words; ++xw) {
        for (Word yw = 0; yw < words; ++yw) {
            const auto& target_row = spec.target_transition[xw * words + yw];
            const auto& source_row = spec.source_transition[yw % n];
            for (std::size_t xn = 0; xn < n; ++xn) {
                if (target_row[xn] == 0.0) continue;
                for (std::size_t yn = 0; yn < n; ++yn) {
                    if (source_row[yn] == 0.0) continue;
                    out[xw * words + yw].push_back(
                        {((xw * n + xn) % words) * words + (yw * n + yn) % words, target_row[xn] * source_row[yn]});
                }
            }
        }
    }
    return out;
}

} // namespace detail

/// Stationary distribution of the joint chain over (X-word, Y-word) states of
/// length k, indexed xword * N^k + yword. Power iteration from uniform; stops
/// when successive iterates differ by less than 1e-14 in max norm.
inline std::vector<double> stationary_distribution(const CoupledMarkovSpec& spec)
{
    spec.validate();
    const auto transitions = detail::joint_transitions(spec);
    const std::size_t states = transitions.size();
    std::vector<double> pi(states, 1.0 / static_cast<double>(states));
    std::vector<double> next(states);
    for (std::size_t it = 0; it < detail::kStationaryMaxIterations; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t s = 0; s < states; ++s)
            for (const auto& [to, p] : transitions[s]) next[to] += pi[s] * p;
        double total = 0.0;
        for (double v : next) total += v;
        double diff = 0.0;
        for (std::size_t s = 0; s < states; ++s) {
            next[s] /= total;
            diff = std::max(diff, std::abs(next[s] - pi[s]));
        }
        pi.swap(next);
        if (diff < detail::kStationaryTolerance) return pi;
    }
    throw ConvergenceError("power iteration did not converge; the joint chain may be periodic or reducible");
}

/// Exact stationary window distribution of (x_{t+1}, X-word of length m,
/// Y-word of length l) as an analytic WordDistribution.
inline WordDistribution exact_word_distribution(const CoupledMarkovSpec& spec, HistorySpec h)
{
    h.validate();
    const std::size_t n = spec.alphabet_size;
    const std::size_t k = spec.order;
    const Word words = spec.history_words();
    const std::size_t window = h.span() + 1;
    const std::size_t path_length = std::max(window, k);
    const Word path_words = detail::checked_pow(n, path_length);
    detail::require(path_words <= detail::kPathEnumerationLimit / path_words,
                    "history too long for exact enumeration");

    const auto pi = stationary_distribution(spec);

    // Paths of (x symbols, y symbols) as base-N words, extended tick by tick.
    struct Path {
        Word xs;
        Word ys;
        double p;
    };
    std::vector<Path> paths;
    for (Word xw = 0; xw < words; ++xw)
        for (Word yw = 0; yw < words; ++yw)
            if (pi[xw * words + yw] > 0.0) paths.push_back({xw, yw, pi[xw * words + yw]});
    for (std::size_t len = k; len < path_length; ++len) {
        std::vector<Path> extended;
        extended.reserve(paths.size() * n * n);
        for (const auto& path : paths) {
            const auto& target_row = spec.target_transition[(path.xs % words) * words + path.ys % words];
            const auto& source_row = spec.source_transition[path.ys % n];
            for (std::size_t xn = 0; xn < n; ++xn)
                for (std::size_t yn = 0; yn < n; ++yn) {
                    const double p = path.p * target_row[xn] * source_row[yn];
                    if (p > 0.0) extended.push_back({path.xs * n + xn, path.ys * n + yn, p});
                }
        }
        paths.swap(extended);
    }

    const Word x_words = detail::checked_pow(n, h.m);
    const Word y_words = detail::checked_pow(n, h.l);
    std::map<std::tuple<Word, Word, Symbol>, double> mass;
    for (const auto& path : paths) {
        const auto future = static_cast<Symbol>(path.xs % n);
        mass[{(path.xs / n) % x_words, (path.ys / n) % y_words, future}] += path.p;
    }
    std::vector<WordCount> cells;
    cells.reserve(mass.size());
    double total = 0.0;
    for (const auto& [key, p] : mass) total += p;
    for (const auto& [key, p] : mass) {
        const auto& [xw, yw, f] = key;
        cells.push_back({f, xw, yw, p / total});
    }
    return WordDistribution::from_probabilities(n, n, h, std::move(cells));
}

/// Exact T_{q; Y->X}(m, l) of the stationary process, evaluated directly on
/// dense joints p(x', X-word) and p(x', (X-word, Y-word)).
inline double exact_transfer_entropy(const CoupledMarkovSpec& spec, RenyiOrder q, HistorySpec h = {})
{
    const auto words = exact_word_distribution(spec, h);
    const std::size_t n = spec.alphabet_size;
    const Word x_words = detail::checked_pow(n, h.m);
    const Word y_words = detail::checked_pow(n, h.l);
    std::vector<double> target_only(n * x_words, 0.0);
    std::vector<double> joint(n * x_words * y_words, 0.0);
    for (const auto& c : words.cells()) {
        target_only[c.future * x_words + c.x_word] += c.weight;
        joint[(c.future * x_words + c.x_word) * y_words + c.y_word] += c.weight;
    }
    const JointDistribution future_given_x({n, x_words}, std::move(target_only));
    const JointDistribution future_given_xy({n, x_words * y_words}, std::move(joint));
    return conditional_entropy(future_given_x, q) - conditional_entropy(future_given_xy, q);
}

} // namespace rte
