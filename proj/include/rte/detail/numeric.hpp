#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "rte/error.hpp"

namespace rte::detail {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double value) noexcept
    {
        const double t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value))
            compensation_ += (sum_ - t) + value;
        else
            compensation_ += (value - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(double value) noexcept
    {
        add(value);
        return *this;
    }

    [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

// 0^q := 0 for every q > 0.
inline double pow_q(double p, double q) noexcept
{
    return p > 0.0 ? std::pow(p, q) : 0.0;
}

// -p log2 p with 0 log 0 := 0.
inline double plogp(double p) noexcept
{
    return p > 0.0 ? -p * std::log2(p) : 0.0;
}

inline constexpr double kShannonWindow = 1e-9;

inline bool is_shannon(double q) noexcept
{
    return std::abs(q - 1.0) < kShannonWindow;
}

/// base^exponent in 64-bit arithmetic; throws if the result would overflow.
inline std::uint64_t checked_pow(std::uint64_t base, std::size_t exponent)
{
    std::uint64_t result = 1;
    for (std::size_t i = 0; i < exponent; ++i) {
        require(base == 0 || result <= std::numeric_limits<std::uint64_t>::max() / base,
                "word space too large for 64-bit word encoding");
        result *= base;
    }
    return result;
}

} // namespace rte::detail
