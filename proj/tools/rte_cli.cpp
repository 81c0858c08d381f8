// rte: command-line driver for transfer-entropy analyses.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rte/rte.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

struct DataArgs {
    std::string input;
    std::string timestamp_column;
    std::vector<std::string> columns;
    std::vector<std::string> tz_offsets;
    std::size_t alphabet = 3;
    std::size_t block = 1;
    std::string bins = "width";
    bool log_returns = false;
    bool presymbolized = false;
};

struct AnalysisArgs {
    std::size_t m = 1;
    std::size_t l = 1;
    double q = 1.0;
    std::size_t surrogates = 20;
    std::uint64_t seed = 0;
    std::size_t block_perm = 0;
    double pseudo_count = 0.0;
    unsigned threads = 0;
};

struct OutputArgs {
    std::string out;
    std::string format = "csv";
    std::string manifest;
};

struct LoadedData {
    std::vector<rte::SymbolSeries> series;
    nlohmann::json manifest;
};

std::string sha256_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw rte::IngestError(rte::IngestError::Kind::MissingFile, path + ": cannot open file");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buffer[1 << 16];
    while (in.read(buffer, sizeof buffer) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < length; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

std::map<std::string, std::int64_t> parse_tz_offsets(const std::vector<std::string>& items)
{
    std::map<std::string, std::int64_t> out;
    for (const auto& item : items) {
        const auto eq = item.rfind('=');
        const std::string label = eq == std::string::npos ? "*" : item.substr(0, eq);
        const std::string minutes = eq == std::string::npos ? item : item.substr(eq + 1);
        std::int64_t value = 0;
        rte::detail::require(rte::detail::parse_number(minutes, value),
                             "--tz-offset expects label=minutes, got '" + item + "'");
        out[label] = value;
    }
    return out;
}

LoadedData load_series(const DataArgs& args, const std::vector<std::string>& wanted)
{
    rte::CsvOptions csv;
    csv.timestamp_column = args.timestamp_column;
    csv.columns = wanted;
    csv.tz_offset_minutes = parse_tz_offsets(args.tz_offsets);

    const auto raw = rte::load_csv(args.input, csv);
    const auto aligned = rte::align_all(raw);

    LoadedData data;
    nlohmann::json columns = nlohmann::json::array();
    for (std::size_t i = 0; i < raw.size(); ++i)
        columns.push_back({{"label", raw[i].label},
                           {"rows", raw[i].size()},
                           {"omitted_cells", raw[i].omitted},
                           {"dropped_by_alignment", raw[i].size() - aligned.timestamps.size()}});
    data.manifest = {{"path", args.input},
                     {"sha256", sha256_file(args.input)},
                     {"tz_offset_minutes", csv.tz_offset_minutes},
                     {"columns", columns},
                     {"aligned_length", aligned.timestamps.size()}};

    for (std::size_t i = 0; i < aligned.labels.size(); ++i) {
        const auto& values = aligned.columns[i];
        if (args.presymbolized) {
            std::vector<rte::Symbol> symbols;
            symbols.reserve(values.size());
            for (double v : values) {
                rte::detail::require(v >= 0 && v < static_cast<double>(args.alphabet) && v == std::floor(v),
                                     "column " + aligned.labels[i] + " holds a value outside the alphabet 0.."
                                         + std::to_string(args.alphabet - 1));
                symbols.push_back(static_cast<rte::Symbol>(v));
            }
            data.series.emplace_back(std::move(symbols), args.alphabet, rte::SymbolOrigin{aligned.labels[i], 1, {}});
        } else {
            rte::SymbolizeOptions opts;
            opts.alphabet_size = args.alphabet;
            opts.block_size = args.block;
            opts.mode = args.bins == "quantile" ? rte::BinningMode::Quantile : rte::BinningMode::EqualWidth;
            opts.log_returns = args.log_returns;
            data.series.push_back(rte::symbolize_series(values, opts, aligned.labels[i]));
        }
    }
    nlohmann::json symbolized = nlohmann::json::array();
    for (const auto& s : data.series)
        symbolized.push_back({{"label", s.origin().label}, {"length", s.size()}, {"edges", s.origin().edges}});
    data.manifest["bin_fit"] = args.presymbolized ? "none" : "per-series";
    data.manifest["symbolized"] = symbolized;
    return data;
}

rte::SurrogateSpec surrogate_spec(const AnalysisArgs& a)
{
    rte::SurrogateSpec spec;
    spec.method = a.block_perm > 0 ? rte::SurrogateMethod::BlockPermutation : rte::SurrogateMethod::Permutation;
    spec.block_length = a.block_perm > 0 ? a.block_perm : 1;
    spec.ensemble_size = a.surrogates;
    spec.seed = a.seed;
    spec.threads = a.threads;
    return spec;
}

template <typename Writer>
void emit(const OutputArgs& out, Writer&& writer)
{
    if (out.out.empty() || out.out == "-") {
        writer(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream file(out.out, std::ios::binary);
    rte::detail::require(static_cast<bool>(file), "cannot write " + out.out);
    writer(file);
    rte::detail::require(static_cast<bool>(file), "failed writing " + out.out);
}

void emit_json(const OutputArgs& out, const nlohmann::json& j)
{
    emit(out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

void write_manifest(const OutputArgs& out, const std::string& command, nlohmann::json body, Clock::time_point start)
{
    if (out.manifest.empty()) return;
    body["tool"] = "rte";
    body["version"] = kVersion;
    body["command"] = command;
    body["output"] = out.out.empty() ? "-" : out.out;
    body["format"] = out.format;
    body["total_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
    std::ofstream file(out.manifest, std::ios::binary);
    rte::detail::require(static_cast<bool>(file), "cannot write " + out.manifest);
    file << body.dump(2) << '\n';
}

nlohmann::json analysis_json(const AnalysisArgs& a, const DataArgs& d)
{
    return {{"q", a.q},
            {"m", a.m},
            {"l", a.l},
            {"N", d.alphabet},
            {"block", d.block},
            {"bins", d.bins},
            {"log_returns", d.log_returns},
            {"presymbolized", d.presymbolized},
            {"pseudo_count", a.pseudo_count},
            {"surrogates", surrogate_spec(a)},
            {"seed", a.seed}};
}

void add_data_options(CLI::App* cmd, DataArgs& d, bool with_columns)
{
    cmd->add_option("--input", d.input, "CSV file with a timestamp column and one column per series")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--timestamp-column", d.timestamp_column, "Timestamp column name (default: first column)");
    if (with_columns)
        cmd->add_option("--columns", d.columns, "Value columns to use (default: all)")->delimiter(',');
    cmd->add_option("--tz-offset", d.tz_offsets, "Clock offset per column, label=minutes (label * = default)")
        ->delimiter(',');
    cmd->add_option("--alphabet", d.alphabet, "Alphabet size N")->capture_default_str()->check(CLI::Range(2, 64));
    cmd->add_option("--block", d.block, "Block length for coarse-graining")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--bins", d.bins, "Binning mode")->capture_default_str()->check(CLI::IsMember({"width", "quantile"}));
    cmd->add_flag("--log-returns", d.log_returns, "Symbolize log returns instead of levels");
    cmd->add_flag("--presymbolized", d.presymbolized, "Columns already hold integer symbols 0..N-1");
}

void add_analysis_options(CLI::App* cmd, AnalysisArgs& a, bool with_q = true, bool with_m = true)
{
    if (with_m) {
        cmd->add_option("--m", a.m, "Target history length")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--l", a.l, "Source history length")->capture_default_str()->check(CLI::PositiveNumber);
    }
    if (with_q) cmd->add_option("--q", a.q, "Renyi order q > 0")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--surrogates", a.surrogates, "Surrogate ensemble size (0 disables the correction)")
        ->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_option("--block-perm", a.block_perm, "Shuffle blocks of this length instead of single symbols");
    cmd->add_option("--pseudo-count", a.pseudo_count, "Additive pseudo-count per cell")->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", a.threads, "Worker threads (0 = all cores); never changes results")
        ->capture_default_str();
}

void add_output_options(CLI::App* cmd, OutputArgs& o, std::vector<std::string> formats)
{
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
    cmd->add_option("--format", o.format, "Output format")->capture_default_str()->check(CLI::IsMember(formats));
    cmd->add_option("--manifest", o.manifest, "Write a JSON run manifest (hashes, parameters, timing) here");
}

std::size_t index_of(const std::vector<rte::SymbolSeries>& series, const std::string& label)
{
    for (std::size_t i = 0; i < series.size(); ++i)
        if (series[i].origin().label == label) return i;
    throw rte::ValidationError("no series labelled " + label);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Shannon and Renyi (effective) transfer entropy between time series"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    DataArgs data;
    AnalysisArgs analysis;
    OutputArgs output;
    std::string source, target, spec_path, preset, from_matrix;
    std::vector<double> q_grid{0.8, 1.0, 1.5};
    std::vector<std::size_t> m_grid{1, 2, 3, 4, 5};
    double windows_per_cell = 5.0;
    double fidelity = 1.0;
    std::size_t length = 10000;

    auto* symbolize = app.add_subcommand("symbolize", "Align, coarse-grain and bin columns into symbols");
    add_data_options(symbolize, data, true);
    add_output_options(symbolize, output, {"csv", "json"});

    auto* te = app.add_subcommand("te", "Effective transfer entropy source -> target");
    add_data_options(te, data, false);
    add_analysis_options(te, analysis);
    add_output_options(te, output, {"csv", "json"});
    te->add_option("--source", source, "Source column")->required();
    te->add_option("--target", target, "Target column")->required();

    auto* matrix = app.add_subcommand("matrix", "Effective TE for every ordered pair of columns");
    add_data_options(matrix, data, true);
    add_analysis_options(matrix, analysis);
    add_output_options(matrix, output, {"csv", "json", "svg"});

    auto* netflow = app.add_subcommand("netflow", "Net information flow T(j->i) - T(i->j)");
    add_data_options(netflow, data, true);
    add_analysis_options(netflow, analysis);
    add_output_options(netflow, output, {"csv", "json", "svg"});
    netflow->get_option("--input")->required(false);
    netflow->add_option("--from-matrix", from_matrix, "Use a flow-matrix CSV written by 'matrix' instead of data")
        ->check(CLI::ExistingFile)
        ->excludes("--input");

    auto* sweep_q = app.add_subcommand("sweep-q", "Effective RTE in both directions over a q grid");
    add_data_options(sweep_q, data, false);
    add_analysis_options(sweep_q, analysis, false);
    add_output_options(sweep_q, output, {"csv", "json"});
    sweep_q->add_option("--source", source, "Source column")->required();
    sweep_q->add_option("--target", target, "Target column")->required();
    sweep_q->add_option("--q-grid", q_grid, "Comma-separated q values")->delimiter(',')->capture_default_str();

    auto* sweep_m = app.add_subcommand("sweep-m", "Effective RTE(m, m) over a grid of history lengths");
    add_data_options(sweep_m, data, false);
    add_analysis_options(sweep_m, analysis, true, false);
    add_output_options(sweep_m, output, {"csv", "json"});
    sweep_m->add_option("--source", source, "Source column")->required();
    sweep_m->add_option("--target", target, "Target column")->required();
    sweep_m->add_option("--m-grid", m_grid, "Comma-separated history lengths")->delimiter(',')->capture_default_str();
    sweep_m->add_option("--min-windows-per-cell", windows_per_cell,
                        "Flag rows with fewer windows than this times N^(2m+1)")
        ->capture_default_str();

    auto* gen = app.add_subcommand("gen-synth", "Sample a coupled Markov pair (columns x, y) as symbols");
    gen->add_option("--spec", spec_path, "Coupled-chain JSON spec")->check(CLI::ExistingFile);
    gen->add_option("--preset", preset, "Built-in process")->check(CLI::IsMember({"copy"}))->excludes("--spec");
    gen->add_option("--alphabet", data.alphabet, "Alphabet size for --preset")->capture_default_str();
    gen->add_option("--fidelity", fidelity, "Copy probability for --preset copy")->capture_default_str();
    gen->add_option("--length", length, "Series length")->capture_default_str();
    gen->add_option("--seed", analysis.seed, "Random seed")->capture_default_str();
    add_output_options(gen, output, {"csv", "json"});

    auto* oracle = app.add_subcommand("oracle", "Exact stationary transfer entropy of a coupled-chain spec");
    oracle->add_option("--spec", spec_path, "Coupled-chain JSON spec")->check(CLI::ExistingFile);
    oracle->add_option("--preset", preset, "Built-in process")->check(CLI::IsMember({"copy"}))->excludes("--spec");
    oracle->add_option("--alphabet", data.alphabet, "Alphabet size for --preset")->capture_default_str();
    oracle->add_option("--fidelity", fidelity, "Copy probability for --preset copy")->capture_default_str();
    oracle->add_option("--m", analysis.m, "Target history length")->capture_default_str();
    oracle->add_option("--l", analysis.l, "Source history length")->capture_default_str();
    oracle->add_option("--q-grid", q_grid, "Comma-separated q values")->delimiter(',')->capture_default_str();
    add_output_options(oracle, output, {"csv", "json"});

    CLI11_PARSE(app, argc, argv);

    const auto start = Clock::now();
    try {
        const auto params = [&] { return analysis_json(analysis, data); };
        const rte::HistorySpec h{analysis.m, analysis.l};
        const rte::CountOptions counts{analysis.pseudo_count};

        auto markov_spec = [&] {
            if (!spec_path.empty()) return rte::load_coupled_spec(spec_path);
            rte::detail::require(!preset.empty(), "give --spec or --preset");
            return rte::noisy_copy_spec(data.alphabet, fidelity);
        };

        if (*symbolize) {
            auto loaded = load_series(data, data.columns);
            if (output.format == "json") {
                nlohmann::json series = nlohmann::json::array();
                for (const auto& s : loaded.series)
                    series.push_back({{"label", s.origin().label},
                                      {"edges", s.origin().edges},
                                      {"symbols", std::vector<rte::Symbol>(s.symbols().begin(), s.symbols().end())}});
                emit_json(output, {{"alphabet", data.alphabet}, {"block", data.block}, {"series", series}});
            } else {
                emit(output, [&](std::ostream& os) {
                    os << "index";
                    for (const auto& s : loaded.series) os << ',' << rte::detail::csv_field(s.origin().label);
                    os << '\n';
                    for (std::size_t t = 0; t < loaded.series.front().size(); ++t) {
                        os << t;
                        for (const auto& s : loaded.series) os << ',' << s[t];
                        os << '\n';
                    }
                });
            }
            write_manifest(output, "symbolize", {{"input", loaded.manifest}, {"parameters", params()}}, start);
        } else if (*te || *sweep_q || *sweep_m) {
            auto loaded = load_series(data, {source, target});
            const auto& y = loaded.series[index_of(loaded.series, source)];
            const auto& x = loaded.series[index_of(loaded.series, target)];
            const auto spec = surrogate_spec(analysis);
            std::vector<rte::SweepRow> rows;
            std::string command;
            if (*te) {
                command = "te";
                auto r = rte::effective_transfer_entropy(x, y, h, rte::RenyiOrder(analysis.q), spec, counts);
                rows.push_back({analysis.q, h, r.raw.direction, std::move(r), false});
            } else if (*sweep_q) {
                command = "sweep-q";
                rows = rte::q_sweep(x, y, h, q_grid, spec, counts);
            } else {
                command = "sweep-m";
                rte::MSweepOptions opts;
                opts.windows_per_cell = windows_per_cell;
                opts.count = counts;
                rows = rte::m_sweep(x, y, m_grid, rte::RenyiOrder(analysis.q), spec, opts);
                for (const auto& r : rows)
                    if (r.sparse)
                        std::cerr << "warning: m=" << r.history.m << " has only " << r.result.raw.windows
                                  << " windows for its word grid; the estimate is in the finite-sample regime\n";
            }
            if (output.format == "json")
                emit_json(output, rte::to_json_value(rows));
            else
                emit(output, [&](std::ostream& os) { rte::write_csv(os, rows); });
            auto p = params();
            if (*sweep_q) p["q_grid"] = q_grid;
            if (*sweep_m) p["m_grid"] = m_grid;
            write_manifest(output, command, {{"input", loaded.manifest}, {"parameters", p}}, start);
        } else if (*matrix || *netflow) {
            const std::string command = *matrix ? "matrix" : "netflow";
            rte::FlowMatrix m;
            nlohmann::json manifest;
            if (!from_matrix.empty()) {
                std::ifstream in(from_matrix, std::ios::binary);
                m = rte::read_flow_matrix_csv(in);
                manifest["input"] = {{"path", from_matrix}, {"sha256", sha256_file(from_matrix)}};
            } else {
                rte::detail::require(!data.input.empty(), "give --input or --from-matrix");
                auto loaded = load_series(data, data.columns);
                std::vector<double> seconds;
                m = rte::pairwise_matrix(loaded.series, h, rte::RenyiOrder(analysis.q), surrogate_spec(analysis),
                                         counts, &seconds);
                nlohmann::json timing = nlohmann::json::array();
                for (std::size_t i = 0; i < m.size(); ++i)
                    for (std::size_t j = 0; j < m.size(); ++j)
                        if (i != j)
                            timing.push_back(
                                {{"source", m.labels[j]}, {"target", m.labels[i]}, {"seconds", seconds[i * m.size() + j]}});
                manifest = {{"input", loaded.manifest}, {"parameters", params()}, {"pair_timing", timing}};
            }
            if (*matrix) {
                if (output.format == "json")
                    emit_json(output, rte::to_json_value(m));
                else if (output.format == "svg")
                    emit(output, [&](std::ostream& os) { rte::write_svg(os, m); });
                else
                    emit(output, [&](std::ostream& os) { rte::write_csv(os, m); });
            } else {
                const auto f = rte::net_flow(m);
                if (output.format == "json")
                    emit_json(output, rte::to_json_value(f));
                else if (output.format == "svg")
                    emit(output, [&](std::ostream& os) { rte::write_svg(os, f); });
                else
                    emit(output, [&](std::ostream& os) { rte::write_csv(os, f); });
            }
            write_manifest(output, command, manifest, start);
        } else if (*gen) {
            const auto spec = markov_spec();
            const auto pair = rte::generate(spec, length, analysis.seed);
            if (output.format == "json") {
                emit_json(output, {{"spec", spec},
                                   {"seed", analysis.seed},
                                   {"x", std::vector<rte::Symbol>(pair.x.symbols().begin(), pair.x.symbols().end())},
                                   {"y", std::vector<rte::Symbol>(pair.y.symbols().begin(), pair.y.symbols().end())}});
            } else {
                emit(output, [&](std::ostream& os) {
                    os << "index,x,y\n";
                    for (std::size_t t = 0; t < length; ++t) os << t << ',' << pair.x[t] << ',' << pair.y[t] << '\n';
                });
            }
            write_manifest(output, "gen-synth",
                           {{"parameters", {{"spec", spec}, {"length", length}, {"seed", analysis.seed}}}}, start);
        } else if (*oracle) {
            const auto spec = markov_spec();
            nlohmann::json rows = nlohmann::json::array();
            for (double q : q_grid)
                rows.push_back({{"q", q},
                                {"m", h.m},
                                {"l", h.l},
                                {"exact", rte::exact_transfer_entropy(spec, rte::RenyiOrder(q), h)}});
            if (output.format == "json") {
                emit_json(output, {{"kind", "oracle"}, {"direction", "y->x"}, {"rows", rows}});
            } else {
                emit(output, [&](std::ostream& os) {
                    os << "q,m,l,exact\r\n";
                    for (const auto& r : rows)
                        os << rte::format_value(r["q"].get<double>()) << ',' << h.m << ',' << h.l << ','
                           << rte::format_value(r["exact"].get<double>()) << "\r\n";
                });
            }
            write_manifest(output, "oracle", {{"parameters", {{"spec", spec}, {"q_grid", q_grid}}}}, start);
        }
    } catch (const rte::IngestError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 3;
    } catch (const rte::ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << '\n';
        return 5;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
