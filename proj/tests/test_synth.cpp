#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "rte/synth.hpp"

using namespace rte;

namespace {

const std::string kFixtures = RTE_FIXTURE_DIR;
const double kLog2_3 = std::log2(3.0);

CoupledMarkovSpec fixture(const std::string& name) { return load_coupled_spec(kFixtures + "/" + name); }

// Shannon TE of a first-order coupled chain by direct enumeration: power
// iterate the 4x4 joint chain, then sum over (x', x, y).
double enumerate_binary_shannon_te(const CoupledMarkovSpec& s)
{
    double P[4][4] = {};
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int xn = 0; xn < 2; ++xn)
                for (int yn = 0; yn < 2; ++yn)
                    P[x * 2 + y][xn * 2 + yn] = s.target_transition[x * 2 + y][xn] * s.source_transition[y][yn];
    double pi[4] = {0.25, 0.25, 0.25, 0.25};
    for (int it = 0; it < 5000; ++it) {
        double next[4] = {};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) next[b] += pi[a] * P[a][b];
        std::copy(next, next + 4, pi);
    }
    double j[2][2][2] = {}; // x', x, y
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int xn = 0; xn < 2; ++xn) j[xn][x][y] = pi[x * 2 + y] * s.target_transition[x * 2 + y][xn];
    double te = 0.0;
    for (int xn = 0; xn < 2; ++xn)
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                const double p = j[xn][x][y];
                if (p == 0) continue;
                const double pxy = j[0][x][y] + j[1][x][y];
                const double pxnx = j[xn][x][0] + j[xn][x][1];
                const double px = pxy + j[0][x][1 - y] + j[1][x][1 - y];
                te += p * std::log2((p / pxy) / (pxnx / px));
            }
    return te;
}

CoupledMarkovSpec random_spec(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.05, 1.0);
    auto row = [&] {
        std::vector<double> r(n);
        double s = 0;
        for (auto& v : r) s += (v = u(rng));
        for (auto& v : r) v /= s;
        double t = 0;
        for (double v : r) t += v;
        r[0] += 1.0 - t;
        return r;
    };
    CoupledMarkovSpec spec;
    spec.alphabet_size = n;
    for (std::size_t i = 0; i < n; ++i) spec.source_transition.push_back(row());
    for (std::size_t i = 0; i < n * n; ++i) spec.target_transition.push_back(row());
    spec.initial_source = row();
    spec.initial_target = row();
    spec.validate();
    return spec;
}

CoupledMarkovSpec relabel(const CoupledMarkovSpec& s, const std::vector<std::size_t>& perm)
{
    CoupledMarkovSpec out = s;
    const std::size_t n = s.alphabet_size;
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t yn = 0; yn < n; ++yn) out.source_transition[perm[y]][perm[yn]] = s.source_transition[y][yn];
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t xn = 0; xn < n; ++xn)
                out.target_transition[perm[x] * n + perm[y]][perm[xn]] = s.target_transition[x * n + y][xn];
    return out;
}

} // namespace

TEST(Generate, CopyProcessIsDeterministicCoupling)
{
    const auto pair = generate(fixture("copy_n3.json"), 10, 42);
    ASSERT_EQ(pair.x.size(), 10u);
    for (std::size_t t = 0; t + 1 < 10; ++t) EXPECT_EQ(pair.x[t + 1], pair.y[t]);
}

TEST(Generate, SeedDeterminism)
{
    const auto spec = fixture("coupled_binary_075.json");
    const auto a = generate(spec, 1000, 7);
    const auto b = generate(spec, 1000, 7);
    const auto c = generate(spec, 1000, 8);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.y, b.y);
    EXPECT_FALSE(a.x == c.x && a.y == c.y);
}

TEST(Generate, ZeroCouplingTargetIsPlainMarkovChain)
{
    const auto spec = fixture("independent_binary.json");
    const auto pair = generate(spec, 200000, 3);
    // Empirical x transition frequencies match the target chain regardless of y.
    double counts[2][2][2] = {};
    for (std::size_t t = 0; t + 1 < pair.x.size(); ++t) counts[pair.y[t]][pair.x[t]][pair.x[t + 1]] += 1;
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            const double total = counts[y][x][0] + counts[y][x][1];
            EXPECT_NEAR(counts[y][x][0] / total, spec.target_transition[x * 2 + y][0], 0.01);
        }
}

TEST(Generate, RejectsInvalidSpecs)
{
    auto spec = fixture("copy_n3.json");
    EXPECT_THROW(generate(spec, 1, 0), ValidationError);
    spec.target_transition[0][0] = 0.5;
    EXPECT_THROW(generate(spec, 10, 0), ValidationError);
    EXPECT_THROW((nlohmann::json{{"N", 2}, {"source_transition", {{1.0, 0.0}}}, {"target_transition", {}}}
                      .get<CoupledMarkovSpec>()),
                 ValidationError);
}

TEST(StationaryDistribution, IsFixedPoint)
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto spec = random_spec(rng, 2 + trial % 3);
        const auto pi = stationary_distribution(spec);
        const auto transitions = detail::joint_transitions(spec);
        std::vector<double> next(pi.size(), 0.0);
        for (std::size_t s = 0; s < pi.size(); ++s)
            for (const auto& [to, p] : transitions[s]) next[to] += pi[s] * p;
        for (std::size_t s = 0; s < pi.size(); ++s) EXPECT_NEAR(next[s], pi[s], 1e-12);
    }
}

TEST(StationaryDistribution, PeriodicChainDoesNotConverge)
{
    CoupledMarkovSpec spec;
    spec.alphabet_size = 3;
    spec.source_transition = {{0.0, 0.5, 0.5}, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    spec.target_transition.assign(9, {1.0, 0.0, 0.0});
    spec.initial_source = spec.initial_target = {1.0 / 3, 1.0 / 3, 1.0 - 2.0 / 3};
    EXPECT_THROW(stationary_distribution(spec), ConvergenceError);
}

TEST(ExactTransferEntropy, CopyProcess)
{
    const auto spec = fixture("copy_n3.json");
    for (double q : {0.5, 0.8, 1.0, 1.5, 3.0}) EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(q)), kLog2_3, 1e-12);
    EXPECT_EQ(spec.alphabet_size, noisy_copy_spec(3).alphabet_size);
    EXPECT_NEAR(exact_transfer_entropy(noisy_copy_spec(3), RenyiOrder(1.0)), kLog2_3, 1e-12);
}

TEST(ExactTransferEntropy, ZeroCoupling)
{
    const auto spec = fixture("independent_binary.json");
    for (double q : {0.3, 0.8, 1.0, 1.5, 4.0}) EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(q)), 0.0, 1e-12);
    const auto built = independent_spec({{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.1, 0.9}});
    EXPECT_NEAR(exact_transfer_entropy(built, RenyiOrder(2.0), {2, 3}), 0.0, 1e-12);
}

TEST(ExactTransferEntropy, BinaryCouplingMatchesEnumeration)
{
    const auto spec = fixture("coupled_binary_075.json");
    const double hb = -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25));
    EXPECT_NEAR(enumerate_binary_shannon_te(spec), 1.0 - hb, 1e-12);
    EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(1.0)), 0.18872187554086717, 1e-12);
    // Frozen from an independent enumeration of the same stationary joint.
    EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(0.5)), 0.10003137304700815, 1e-12);
    EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(0.8)), 0.1548977622411033, 1e-12);
    EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(1.5)), 0.2627452684932581, 1e-12);
    EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(2.0)), 0.3219280948873623, 1e-12);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto random = random_spec(rng, 2);
        EXPECT_NEAR(exact_transfer_entropy(random, RenyiOrder(1.0)), enumerate_binary_shannon_te(random), 1e-12);
    }
}

TEST(ExactTransferEntropy, InvariantUnderRelabeling)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const auto spec = random_spec(rng, 3);
        const auto permuted = relabel(spec, {2, 0, 1});
        for (double q : {0.5, 1.0, 2.0})
            EXPECT_NEAR(exact_transfer_entropy(spec, RenyiOrder(q)), exact_transfer_entropy(permuted, RenyiOrder(q)),
                        1e-12);
    }
}

TEST(ExactTransferEntropy, OrderTwoTargetPlateaus)
{
    const auto spec = fixture("order2_xor.json");
    ASSERT_EQ(spec.order, 2u);
    // Frozen from an independent path-enumeration oracle.
    const struct {
        double q;
        double m1, m2, m3;
    } cases[] = {{1.0, 0.0, 0.5310044064107188, 0.5310044064107178},
                 {1.5, 0.0, 0.6489255594531194, 0.6489255594531214},
                 {0.8, 0.0, 0.46052012636173745, 0.4605201263617328}};
    for (const auto& c : cases) {
        const RenyiOrder q(c.q);
        EXPECT_NEAR(exact_transfer_entropy(spec, q, {1, 1}), c.m1, 1e-12);
        EXPECT_NEAR(exact_transfer_entropy(spec, q, {2, 2}), c.m2, 1e-12);
        EXPECT_NEAR(exact_transfer_entropy(spec, q, {3, 3}), c.m3, 1e-12);
    }
}

TEST(ExactWordDistribution, MatchesLongRunFrequencies)
{
    const auto spec = fixture("order2_xor.json");
    const auto exact = exact_word_distribution(spec, {2, 2});
    const auto pair = generate(spec, 400000, 9);
    const auto counted = count_words(pair.x, pair.y, {2, 2});
    for (const auto& c : exact.cells())
        EXPECT_NEAR(counted.weight(c.future, c.x_word, c.y_word) / counted.total(), c.weight, 3e-3);
}

TEST(CoupledMarkovSpec, JsonRoundTrip)
{
    const auto spec = fixture("order2_xor.json");
    const nlohmann::json j = spec;
    const auto back = j.get<CoupledMarkovSpec>();
    EXPECT_EQ(back.order, 2u);
    EXPECT_EQ(back.target_transition, spec.target_transition);
    EXPECT_EQ(back.initial_source, (std::vector<double>{0.5, 0.5}));
}
