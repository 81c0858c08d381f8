#pragma once

// Shuffled-source surrogates and effective (bias-corrected) transfer entropy.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "json.hpp"
#include "rte/detail/numeric.hpp"
#include "rte/detail/parallel.hpp"
#include "rte/detail/random.hpp"
#include "rte/error.hpp"
#include "rte/transfer.hpp"

namespace rte {

enum class SurrogateMethod { Permutation, BlockPermutation };

NLOHMANN_JSON_SERIALIZE_ENUM(SurrogateMethod, {
    {SurrogateMethod::Permutation, "permutation"},
    {SurrogateMethod::BlockPermutation, "block-permutation"},
})

struct SurrogateSpec {
    SurrogateMethod method = SurrogateMethod::Permutation;
    std::size_t ensemble_size = 20;
    std::uint64_t seed = 0;
    std::size_t block_length = 1; // block-permutation only
    /// Worker threads for replica evaluation; 0 = hardware concurrency.
    /// Does not affect results.
    unsigned threads = 1;

    void validate() const
    {
        detail::require(method != SurrogateMethod::BlockPermutation || block_length >= 1,
                        "block-permutation surrogates need a block length of at least 1");
    }
};

inline void to_json(nlohmann::json& j, const SurrogateSpec& s)
{
    j = nlohmann::json{{"method", s.method}, {"ensemble_size", s.ensemble_size}, {"seed", s.seed}};
    if (s.method == SurrogateMethod::BlockPermutation) j["block_length"] = s.block_length;
}

/// Shuffled copy of y for replica `replica_index`. The random stream depends
/// only on (seed, replica_index), never on evaluation order.
inline SymbolSeries make_surrogate(const SymbolSeries& y, const SurrogateSpec& spec, std::uint64_t replica_index)
{
    spec.validate();
    std::vector<Symbol> symbols(y.symbols().begin(), y.symbols().end());
    if (symbols.size() <= 1) return y.with_symbols(std::move(symbols));

    std::mt19937_64 engine(detail::stream_seed(spec.seed, replica_index));
    if (spec.method == SurrogateMethod::Permutation) {
        detail::fisher_yates(std::span<Symbol>(symbols), engine);
        return y.with_symbols(std::move(symbols));
    }

    // Contiguous blocks keep their internal order; only block order is
    // shuffled. A trailing short block is shuffled like any other.
    const std::size_t b = spec.block_length;
    const std::size_t blocks = (symbols.size() + b - 1) / b;
    std::vector<std::size_t> order(blocks);
    std::iota(order.begin(), order.end(), std::size_t{0});
    detail::fisher_yates(std::span<std::size_t>(order), engine);
    std::vector<Symbol> out;
    out.reserve(symbols.size());
    for (std::size_t block : order) {
        const std::size_t begin = block * b;
        const std::size_t end = std::min(begin + b, symbols.size());
        out.insert(out.end(), symbols.begin() + static_cast<std::ptrdiff_t>(begin),
                   symbols.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return y.with_symbols(std::move(out));
}

/// Raw estimate, surrogate ensemble statistics and effective = raw - mean.
struct EffectiveResult {
    TransferResult raw;
    double surrogate_mean = 0.0;
    double surrogate_std = 0.0; // sample standard deviation; 0 for fewer than 2 replicas
    double effective = 0.0;
    SurrogateSpec spec;
    std::vector<double> surrogate_values;
};

/// Effective transfer entropy T_{q; Y->X} - mean over surrogates of
/// T_{q; Y_shuffled->X}. With ensemble_size = 0 the effective value is the
/// raw value.
inline EffectiveResult effective_transfer_entropy(const SymbolSeries& x, const SymbolSeries& y, HistorySpec h,
                                                  RenyiOrder q, const SurrogateSpec& spec,
                                                  CountOptions options = {})
{
    spec.validate();
    EffectiveResult result;
    result.spec = spec;
    result.raw = transfer_entropy(x, y, h, q, options);

    result.surrogate_values.assign(spec.ensemble_size, 0.0);
    detail::parallel_for(spec.ensemble_size, spec.threads, [&](std::size_t r) {
        const auto shuffled = make_surrogate(y, spec, r);
        result.surrogate_values[r] = transfer_entropy(x, shuffled, h, q, options).value;
    });

    if (!result.surrogate_values.empty()) {
        detail::CompensatedSum sum;
        for (double v : result.surrogate_values) sum += v;
        result.surrogate_mean = sum.value() / static_cast<double>(result.surrogate_values.size());
    }
    if (result.surrogate_values.size() >= 2) {
        detail::CompensatedSum sq;
        for (double v : result.surrogate_values) sq += (v - result.surrogate_mean) * (v - result.surrogate_mean);
        result.surrogate_std = std::sqrt(sq.value() / static_cast<double>(result.surrogate_values.size() - 1));
    }
    result.effective = result.raw.value - result.surrogate_mean;
    return result;
}

} // namespace rte
