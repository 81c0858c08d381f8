#pragma once

// Entropy algebra on explicit finite distributions.
//
// Every quantity is in bits. Rényi quantities of order q reduce to their
// Shannon counterparts when |q - 1| < 1e-9; that window is routed to the
// closed-form Shannon expressions instead of evaluating the 1/(1-q) factor.
// Zero-probability cells follow 0 log 0 = 0 and 0^q = 0.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rte/detail/numeric.hpp"
#include "rte/error.hpp"

namespace rte {

inline constexpr double kDistributionTolerance = 1e-12;

/// Order q > 0 of a Rényi measure. q = 1 selects the Shannon branch.
class RenyiOrder {
public:
    explicit RenyiOrder(double q) : q_(q)
    {
        detail::require(std::isfinite(q) && q > 0.0,
                        "Renyi order must be a finite positive number, got " + std::to_string(q));
    }

    [[nodiscard]] double value() const noexcept { return q_; }
    [[nodiscard]] bool is_shannon() const noexcept { return detail::is_shannon(q_); }

    friend bool operator==(const RenyiOrder&, const RenyiOrder&) = default;

private:
    double q_;
};

namespace detail {

inline double validated_total(std::span<const double> probs, const char* what)
{
    require(!probs.empty(), std::string(what) + " must have at least one cell");
    CompensatedSum total;
    for (double p : probs) {
        require(std::isfinite(p) && p >= 0.0,
                std::string(what) + " has a negative or non-finite entry");
        total += p;
    }
    require(std::abs(total.value() - 1.0) <= kDistributionTolerance,
            std::string(what) + " does not sum to 1 (sum = " + std::to_string(total.value()) + ")");
    return total.value();
}

} // namespace detail

/// Probability vector over a finite alphabet. Construction validates; there is
/// no silent renormalization.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs))
    {
        detail::validated_total(probs_, "distribution");
    }

    /// Normalizes non-negative weights (e.g. counts) explicitly.
    static DiscreteDistribution from_weights(std::span<const double> weights)
    {
        detail::CompensatedSum total;
        for (double w : weights) {
            detail::require(std::isfinite(w) && w >= 0.0, "weights must be finite and non-negative");
            total += w;
        }
        detail::require(total.value() > 0.0, "weights must not all be zero");
        std::vector<double> probs(weights.begin(), weights.end());
        for (double& p : probs) p /= total.value();
        return DiscreteDistribution(std::move(probs));
    }

    static DiscreteDistribution uniform(std::size_t size)
    {
        detail::require(size > 0, "uniform distribution needs at least one cell");
        return DiscreteDistribution(std::vector<double>(size, 1.0 / static_cast<double>(size)));
    }

    [[nodiscard]] std::span<const double> probs() const& noexcept { return probs_; }
    [[nodiscard]] std::vector<double> probs() && noexcept { return std::move(probs_); }
    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::vector<double> probs_;
};

/// Joint probability tensor, row-major over `shape`. Axis 0 varies slowest.
class JointDistribution {
public:
    JointDistribution(std::vector<std::size_t> shape, std::vector<double> probs)
        : shape_(std::move(shape)), probs_(std::move(probs))
    {
        detail::require(!shape_.empty(), "joint distribution needs at least one axis");
        std::size_t cells = 1;
        for (std::size_t extent : shape_) {
            detail::require(extent > 0, "joint distribution axes must be non-empty");
            cells *= extent;
        }
        detail::require(cells == probs_.size(), "joint distribution shape does not match cell count");
        detail::validated_total(probs_, "joint distribution");
    }

    /// rows index the first variable, columns the second.
    static JointDistribution from_matrix(const std::vector<std::vector<double>>& rows)
    {
        detail::require(!rows.empty() && !rows.front().empty(), "matrix must be non-empty");
        const std::size_t cols = rows.front().size();
        std::vector<double> flat;
        flat.reserve(rows.size() * cols);
        for (const auto& row : rows) {
            detail::require(row.size() == cols, "matrix rows must have equal length");
            flat.insert(flat.end(), row.begin(), row.end());
        }
        return JointDistribution({rows.size(), cols}, std::move(flat));
    }

    static JointDistribution product(const DiscreteDistribution& a, const DiscreteDistribution& b)
    {
        std::vector<double> flat;
        flat.reserve(a.size() * b.size());
        for (double pa : a.probs())
            for (double pb : b.probs()) flat.push_back(pa * pb);
        return JointDistribution({a.size(), b.size()}, std::move(flat));
    }

    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    [[nodiscard]] std::span<const double> probs() const& noexcept { return probs_; }
    [[nodiscard]] std::vector<double> probs() && noexcept { return std::move(probs_); }

    [[nodiscard]] double at(std::span<const std::size_t> index) const
    {
        return probs_[flat_index(index)];
    }

    /// Sums out every axis not listed in `keep`; kept axes appear in the
    /// order given.
    [[nodiscard]] JointDistribution marginal(const std::vector<std::size_t>& keep) const
    {
        return regroup({keep});
    }

    [[nodiscard]] DiscreteDistribution axis_marginal(std::size_t axis) const
    {
        auto m = marginal({axis});
        return DiscreteDistribution(std::vector<double>(m.probs().begin(), m.probs().end()));
    }

    /// Flattens each group of axes into a single axis. Axes absent from every
    /// group are summed out. `regroup({{0}, {1, 2}})` turns p(x,y,z) into
    /// p(x, (y,z)).
    [[nodiscard]] JointDistribution regroup(const std::vector<std::vector<std::size_t>>& groups) const
    {
        std::vector<bool> used(rank(), false);
        std::vector<std::size_t> new_shape;
        for (const auto& group : groups) {
            detail::require(!group.empty(), "axis group must not be empty");
            std::size_t extent = 1;
            for (std::size_t axis : group) {
                detail::require(axis < rank() && !used[axis], "invalid or repeated axis in regroup");
                used[axis] = true;
                extent *= shape_[axis];
            }
            new_shape.push_back(extent);
        }
        std::size_t cells = 1;
        for (std::size_t extent : new_shape) cells *= extent;

        std::vector<detail::CompensatedSum> acc(cells);
        std::vector<std::size_t> index(rank(), 0);
        for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
            std::size_t target = 0;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                std::size_t sub = 0;
                for (std::size_t axis : groups[g]) sub = sub * shape_[axis] + index[axis];
                target = target * new_shape[g] + sub;
            }
            acc[target] += probs_[flat];
            for (std::size_t axis = rank(); axis-- > 0;) {
                if (++index[axis] < shape_[axis]) break;
                index[axis] = 0;
            }
        }
        std::vector<double> out(cells);
        for (std::size_t i = 0; i < cells; ++i) out[i] = acc[i].value();
        return JointDistribution(std::move(new_shape), std::move(out));
    }

    /// Axis-reordered copy; `transposed({1, 0})` swaps the two variables.
    [[nodiscard]] JointDistribution transposed(const std::vector<std::size_t>& order) const
    {
        detail::require(order.size() == rank(), "transpose order must list every axis");
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t axis : order) groups.push_back({axis});
        return regroup(groups);
    }

private:
    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> index) const
    {
        detail::require(index.size() == rank(), "index rank mismatch");
        std::size_t flat = 0;
        for (std::size_t axis = 0; axis < rank(); ++axis) {
            detail::require(index[axis] < shape_[axis], "index out of range");
            flat = flat * shape_[axis] + index[axis];
        }
        return flat;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> probs_;
};

namespace detail {

inline double entropy_of_cells(std::span<const double> probs, double q)
{
    CompensatedSum acc;
    if (is_shannon(q)) {
        for (double p : probs) acc += plogp(p);
        return acc.value();
    }
    for (double p : probs) acc += pow_q(p, q);
    return std::log2(acc.value()) / (1.0 - q);
}

inline double power_sum(std::span<const double> probs, double q)
{
    CompensatedSum acc;
    for (double p : probs) acc += pow_q(p, q);
    return acc.value();
}

} // namespace detail

/// Rényi entropy S_q = log2(sum p^q) / (1 - q); Shannon entropy at q = 1.
inline double entropy(const DiscreteDistribution& dist, RenyiOrder q)
{
    return detail::entropy_of_cells(dist.probs(), q.value());
}

/// Joint entropy S_q(X ∩ Y ∩ ...) over all cells of the tensor.
inline double entropy(const JointDistribution& joint, RenyiOrder q)
{
    return detail::entropy_of_cells(joint.probs(), q.value());
}

/// Escort distribution p^q / sum p^q.
inline DiscreteDistribution escort(const DiscreteDistribution& dist, RenyiOrder q)
{
    const double norm = detail::power_sum(dist.probs(), q.value());
    detail::require(norm > 0.0, "escort distribution of an all-zero vector is undefined");
    std::vector<double> out(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) out[i] = detail::pow_q(dist[i], q.value()) / norm;
    return DiscreteDistribution(std::move(out));
}

/// S_q(X | Y) for a rank-2 joint p(x, y); conditioning is on axis 1.
///
/// For q != 1 this is log2( sum_{x,y} p^q(x,y) / sum_y p^q(y) ) / (1 - q),
/// which makes S_q(X ∩ Y) = S_q(Y) + S_q(X | Y) hold exactly.
inline double conditional_entropy(const JointDistribution& joint, RenyiOrder q)
{
    detail::require(joint.rank() == 2, "conditional_entropy expects a rank-2 joint p(x, y)");
    const std::size_t rows = joint.shape()[0];
    const std::size_t cols = joint.shape()[1];
    const auto p = joint.probs();

    std::vector<detail::CompensatedSum> marginal(cols);
    for (std::size_t x = 0; x < rows; ++x)
        for (std::size_t y = 0; y < cols; ++y) marginal[y] += p[x * cols + y];

    if (q.is_shannon()) {
        detail::CompensatedSum acc;
        for (std::size_t x = 0; x < rows; ++x) {
            for (std::size_t y = 0; y < cols; ++y) {
                const double pxy = p[x * cols + y];
                if (pxy > 0.0) acc += -pxy * std::log2(pxy / marginal[y].value());
            }
        }
        return acc.value();
    }

    const double qv = q.value();
    detail::CompensatedSum denominator;
    for (const auto& m : marginal) denominator += detail::pow_q(m.value(), qv);
    const double numerator = detail::power_sum(p, qv);
    return std::log2(numerator / denominator.value()) / (1.0 - qv);
}

/// I_q(X;Y) = S_q(X) + S_q(Y) - S_q(X ∩ Y). Non-negative at q = 1 only.
inline double mutual_information(const JointDistribution& joint, RenyiOrder q)
{
    detail::require(joint.rank() == 2, "mutual_information expects a rank-2 joint p(x, y)");
    return entropy(joint.axis_marginal(0), q) + entropy(joint.axis_marginal(1), q) - entropy(joint, q);
}

/// I_q(X;Y|Z) = S_q(X|Z) - S_q(X|Y ∩ Z) for a rank-3 joint p(x, y, z).
inline double conditional_mutual_information(const JointDistribution& joint, RenyiOrder q)
{
    detail::require(joint.rank() == 3,
                    "conditional_mutual_information expects a rank-3 joint p(x, y, z)");
    const auto x_given_z = joint.regroup({{0}, {2}});
    const auto x_given_yz = joint.regroup({{0}, {1, 2}});
    return conditional_entropy(x_given_z, q) - conditional_entropy(x_given_yz, q);
}

/// S_q(prior) - S_q(posterior): the information gained (or, for q != 1,
/// possibly lost) when a prior over X is replaced by a posterior.
inline double entropy_gain(const DiscreteDistribution& prior, const DiscreteDistribution& posterior,
                           RenyiOrder q)
{
    detail::require(prior.size() == posterior.size(),
                    "entropy_gain needs prior and posterior over the same alphabet");
    return entropy(prior, q) - entropy(posterior, q);
}

} // namespace rte
