#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rte/report.hpp"
#include "rte/synth.hpp"

using namespace rte;

namespace {

const double kLog2_3 = std::log2(3.0);

SymbolSeries iid_uniform(std::size_t n, std::size_t length, std::uint64_t seed, std::string label)
{
    std::mt19937_64 rng(seed);
    std::vector<Symbol> s(length);
    for (auto& x : s) x = static_cast<Symbol>(rng() % n);
    return SymbolSeries(std::move(s), n, SymbolOrigin{std::move(label), 1, {}});
}

SymbolSeries delayed_copy(const SymbolSeries& y, std::string label)
{
    std::vector<Symbol> xs(y.size(), 0);
    for (std::size_t t = 0; t + 1 < y.size(); ++t) xs[t + 1] = y[t];
    return SymbolSeries(std::move(xs), y.alphabet_size(), SymbolOrigin{std::move(label), 1, {}});
}

FlowMatrix matrix_from(const std::vector<std::vector<double>>& v)
{
    FlowMatrix m;
    for (std::size_t i = 0; i < v.size(); ++i) m.labels.push_back("L" + std::to_string(i));
    m.cells.assign(v.size(), std::vector<std::optional<FlowCell>>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
            if (i != j) m.cells[i][j] = FlowCell{v[i][j], v[i][j], 0.0, 0.0};
    return m;
}

} // namespace

TEST(NetFlow, Examples)
{
    const auto f = net_flow(matrix_from({{0, 0.5}, {0.2, 0}}));
    EXPECT_NEAR(f.values[0][1], 0.3, 1e-15);
    EXPECT_NEAR(f.values[1][0], -0.3, 1e-15);
    EXPECT_EQ(f.values[0][0], 0.0);

    const auto sym = net_flow(matrix_from({{0, 0.7, 0.1}, {0.7, 0, 0.4}, {0.1, 0.4, 0}}));
    for (const auto& row : sym.values)
        for (double v : row) EXPECT_EQ(v, 0.0);
}

TEST(NetFlow, AntisymmetricForRandomInput)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + trial % 10;
        std::vector<std::vector<double>> v(n, std::vector<double>(n));
        for (auto& row : v)
            for (auto& x : row) x = g(rng);
        const auto f = net_flow(matrix_from(v));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) EXPECT_LE(std::abs(f.values[i][j] + f.values[j][i]), 1e-12);
    }
}

TEST(PairwiseMatrix, OrientationIsTargetBySource)
{
    const auto a = iid_uniform(3, 20000, 1, "A");
    const auto b = delayed_copy(a, "B");
    SurrogateSpec spec;
    spec.ensemble_size = 5;
    spec.seed = 17;
    const auto m = pairwise_matrix({a, b}, {1, 1}, RenyiOrder(1.0), spec);
    EXPECT_FALSE(m.value(0, 0));
    EXPECT_FALSE(m.value(1, 1));
    EXPECT_NEAR(*m.value(1, 0), kLog2_3, 0.05); // A -> B
    EXPECT_NEAR(*m.value(0, 1), 0.0, 0.01);     // B -> A

    const auto f = net_flow(m);
    EXPECT_GT(f.values[1][0], 1.5);
    EXPECT_EQ(f.values[0][1], -f.values[1][0]);

    std::ostringstream csv;
    write_csv(csv, m);
    const std::string text = csv.str();
    EXPECT_EQ(text.substr(0, text.find("\r\n")), "target\\source,A,B");
    EXPECT_NE(text.find("\r\nA,,"), std::string::npos);
}

TEST(PairwiseMatrix, CopyProcessStructure)
{
    // Two independent copy-process pairs: only A->B and C->D carry log2 3.
    const auto a = iid_uniform(3, 30000, 3, "A");
    const auto c = iid_uniform(3, 30000, 4, "C");
    const auto m = pairwise_matrix({a, delayed_copy(a, "B"), c, delayed_copy(c, "D")}, {1, 1}, RenyiOrder(1.5),
                                   SurrogateSpec{SurrogateMethod::Permutation, 5, 9, 1, 0});
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t s = 0; s < 4; ++s) {
            if (s == t) continue;
            const bool coupled = (s == 0 && t == 1) || (s == 2 && t == 3);
            EXPECT_NEAR(*m.value(t, s), coupled ? kLog2_3 : 0.0, coupled ? 0.05 : 0.02) << s << "->" << t;
        }
}

TEST(PairwiseMatrix, IndependentSeriesNearZero)
{
    std::vector<SymbolSeries> series;
    for (int i = 0; i < 3; ++i) series.push_back(iid_uniform(3, 50000, 20 + i, "S" + std::to_string(i)));
    const auto m = pairwise_matrix(series, {1, 1}, RenyiOrder(0.8), SurrogateSpec{SurrogateMethod::Permutation, 10, 1, 1, 0});
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < 3; ++s) {
            if (s == t) continue;
            EXPECT_NEAR(*m.value(t, s), 0.0, 0.01);
        }
}

TEST(PairwiseMatrix, Preconditions)
{
    const auto a = iid_uniform(3, 100, 1, "A");
    EXPECT_THROW(pairwise_matrix({a}, {1, 1}, RenyiOrder(1.0), SurrogateSpec{}), ValidationError);
    EXPECT_THROW(pairwise_matrix({a, iid_uniform(3, 99, 2, "B")}, {1, 1}, RenyiOrder(1.0), SurrogateSpec{}),
                 ValidationError);
    EXPECT_THROW(pairwise_matrix({a, iid_uniform(3, 100, 2, "A")}, {1, 1}, RenyiOrder(1.0), SurrogateSpec{}),
                 ValidationError);
    try {
        pairwise_matrix({a, iid_uniform(3, 100, 2, "B")}, {100, 1}, RenyiOrder(1.0), SurrogateSpec{});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("pair "), std::string::npos);
    }
}

TEST(PairwiseMatrix, ParallelMatchesSerialByteForByte)
{
    std::vector<SymbolSeries> series;
    for (int i = 0; i < 4; ++i) series.push_back(iid_uniform(3, 5000, 40 + i, "S" + std::to_string(i)));
    SurrogateSpec spec{SurrogateMethod::Permutation, 6, 77, 1, 1};
    const auto serial = pairwise_matrix(series, {2, 1}, RenyiOrder(1.5), spec);
    spec.threads = 8;
    const auto parallel = pairwise_matrix(series, {2, 1}, RenyiOrder(1.5), spec);
    std::ostringstream a, b;
    write_csv(a, serial);
    write_csv(b, parallel);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_EQ(to_json_value(serial).dump(), to_json_value(parallel).dump());
}

TEST(Emit, FlowMatrixCsvRoundTrip)
{
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<std::vector<double>> v(11, std::vector<double>(11));
    for (auto& row : v)
        for (auto& x : row) x = g(rng) * 1e-3;
    auto m = matrix_from(v);
    m.labels[3] = "S&P 500, US";
    std::ostringstream out;
    write_csv(out, m);
    std::istringstream in(out.str());
    const auto back = read_flow_matrix_csv(in);
    ASSERT_EQ(back.labels, m.labels);
    std::size_t lines = 0;
    for (char c : out.str()) lines += c == '\n';
    EXPECT_EQ(lines, 12u);
    for (std::size_t i = 0; i < 11; ++i)
        for (std::size_t j = 0; j < 11; ++j) {
            if (i == j) {
                EXPECT_FALSE(back.value(i, j));
                continue;
            }
            EXPECT_EQ(format_value(*back.value(i, j)), format_value(*m.value(i, j)));
            EXPECT_LE(std::abs(*back.value(i, j) - v[i][j]), 1e-11 * std::abs(v[i][j]));
        }
}

TEST(Emit, SvgHeatMaps)
{
    const auto m = matrix_from({{0, 0.5, -0.1}, {0.2, 0, 0.3}, {0.05, 0.4, 0}});
    std::ostringstream flow, net;
    write_svg(flow, m);
    write_svg(net, net_flow(m));
    EXPECT_EQ(flow.str().rfind("<svg", 0), 0u);
    EXPECT_NE(flow.str().find("min -0.1"), std::string::npos);
    EXPECT_NE(flow.str().find("max 0.5"), std::string::npos);
    EXPECT_NE(flow.str().find("fill=\"none\""), std::string::npos);
    EXPECT_NE(net.str().find("centred at 0"), std::string::npos);
    // The largest |F| gets the saturated end of the diverging scale.
    EXPECT_NE(net.str().find("#b3172b"), std::string::npos);
    EXPECT_NE(net.str().find("#2166ab"), std::string::npos);
}

TEST(QSweep, CopyProcessIsFlatInQ)
{
    const auto y = iid_uniform(3, 50000, 5, "Y");
    const auto x = delayed_copy(y, "X");
    SurrogateSpec spec{SurrogateMethod::Permutation, 5, 2, 1, 0};
    const auto rows = q_sweep(x, y, {1, 1}, {0.5, 1.0, 1.5}, spec);
    ASSERT_EQ(rows.size(), 6u);
    for (std::size_t i = 0; i < rows.size(); i += 2) {
        EXPECT_EQ(rows[i].direction, "Y->X");
        EXPECT_NEAR(rows[i].result.raw.value, kLog2_3, 1e-3);
        EXPECT_EQ(rows[i + 1].direction, "X->Y");
        EXPECT_NEAR(rows[i + 1].result.effective, 0.0, 0.01);
    }
    std::ostringstream csv;
    write_csv(csv, rows);
    EXPECT_EQ(csv.str().substr(0, csv.str().find("\r\n")),
              "q,m,l,direction,raw,surrogate_mean,surrogate_std,effective,windows,sparse");
}

TEST(QSweep, UnitRowMatchesShannonEffectiveTe)
{
    const auto spec_markov = load_coupled_spec(std::string(RTE_FIXTURE_DIR) + "/coupled_binary_075.json");
    const auto pair = generate(spec_markov, 20000, 11);
    SurrogateSpec spec{SurrogateMethod::Permutation, 8, 5, 1, 0};
    const auto rows = q_sweep(pair.x, pair.y, {1, 1}, {0.8, 1.0, 1.5}, spec);
    const auto shannon = effective_transfer_entropy(pair.x, pair.y, {1, 1}, RenyiOrder(1.0), spec);
    EXPECT_NEAR(rows[2].result.effective, shannon.effective, 1e-10);
    EXPECT_NEAR(rows[2].result.raw.value, shannon_transfer_entropy(count_words(pair.x, pair.y, {1, 1})).value, 1e-10);
    EXPECT_THROW(q_sweep(pair.x, pair.y, {1, 1}, {}, spec), ValidationError);
    EXPECT_THROW(q_sweep(pair.x, pair.y, {1, 1}, {-1.0}, spec), ValidationError);
}

TEST(MSweep, OrderTwoPlateauAndSparseFlag)
{
    const auto spec_markov = load_coupled_spec(std::string(RTE_FIXTURE_DIR) + "/order2_xor.json");
    const auto pair = generate(spec_markov, 100000, 6);
    SurrogateSpec spec{SurrogateMethod::Permutation, 4, 3, 1, 0};
    const auto rows = m_sweep(pair.x, pair.y, {1, 2, 3, 8}, RenyiOrder(1.0), spec);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_NEAR(rows[0].result.raw.value, 0.0, 0.01);
    EXPECT_NEAR(rows[1].result.raw.value, 0.5310044064107188, 0.01);
    EXPECT_NEAR(rows[2].result.raw.value, 0.5310044064107188, 0.02);
    EXPECT_FALSE(rows[1].sparse);
    EXPECT_TRUE(rows[3].sparse); // 2^17 cells for 1e5 windows
    EXPECT_EQ(rows[1].history.l, 2u);

    const SymbolSeries shortx({0, 1, 0}, 2), shorty({1, 1, 0}, 2);
    EXPECT_THROW(m_sweep(shortx, shorty, {3}, RenyiOrder(1.0), spec), ValidationError);
}

TEST(MSweep, CopyProcessPlateausImmediately)
{
    const auto y = iid_uniform(3, 60000, 12, "Y");
    const auto x = delayed_copy(y, "X");
    const auto rows = m_sweep(x, y, {1, 2, 3}, RenyiOrder(1.5), SurrogateSpec{SurrogateMethod::Permutation, 0, 0, 1, 1});
    for (const auto& r : rows) EXPECT_NEAR(r.result.raw.value, kLog2_3, 0.02);
}
