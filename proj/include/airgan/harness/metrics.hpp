#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "airgan/core/error.hpp"
#include "airgan/radio/world.hpp"

namespace airgan::harness {

/// One (method, field) run. Per-episode vectors all have one entry per episode; a failed
/// run has none.
struct RunMetrics {
    std::string cell = "default";
    std::string method;
    int n_drones = 0;
    std::uint64_t seed = 0;
    int n_users = 0;
    std::string field_digest;
    int best_total = 0;
    std::vector<int> totals;
    std::vector<std::vector<int>> per_agent;
    std::vector<std::vector<radio::Cell>> final_cells;
    std::vector<double> fractions;
    bool failed = false;
    std::string diagnostic;
    double wall_clock_s = 0.0;

    std::size_t episodes() const { return totals.size(); }
};

/// Flat view, one per (run, episode); the rows file holds exactly these.
struct EpisodeRow {
    std::string cell;
    std::string method;
    int n_drones = 0;
    std::uint64_t seed = 0;
    std::size_t episode = 0;
    int total_connected = 0;
    int best_total = 0;
    double fraction_of_best = 0.0;
    std::vector<int> per_agent;
    std::vector<radio::Cell> final_cells;

    friend bool operator==(const EpisodeRow&, const EpisodeRow&) = default;
};

struct SummaryRow {
    std::string cell;
    std::string method;
    int n_drones = 0;
    std::size_t runs = 0;
    std::size_t failed = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double convergence_median = 0.0;
};

inline constexpr const char* rows_header
    = "cell,method,n_drones,seed,episode,total_connected,best_total,fraction_of_best,per_agent,final_cells";
inline constexpr const char* summary_header = "cell,method,n_drones,runs,failed,mean,median,q1,q3,convergence_median";
inline constexpr const char* failures_header = "cell,method,n_drones,seed,diagnostic";
inline constexpr std::size_t score_window = 10;

/// Linear-interpolation sample quantile (Hyndman-Fan type 7).
inline double quantile(std::vector<double> values, double p)
{
    require(!values.empty(), "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

inline double mean_of(const std::vector<double>& v)
{
    require(!v.empty(), "mean of an empty sample");
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

inline double tail_mean(const std::vector<double>& v, std::size_t window = score_window)
{
    require(!v.empty(), "tail mean of an empty sample");
    const std::size_t n = std::min(window, v.size());
    return mean_of(std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(n), v.end()));
}

/// First episode (1-based) whose value reaches `level` times the mean of the last
/// `window` episodes.
inline std::size_t convergence_episode(const std::vector<double>& v, double level = 0.95,
                                       std::size_t window = score_window)
{
    const double plateau = tail_mean(v, window);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= level * plateau) {
            return i + 1;
        }
    }
    return v.size();
}

/// First episode (1-based) at which the trailing `window`-episode mean reaches `target`;
/// 0 if it never does.
inline std::size_t moving_mean_hit(const std::vector<double>& v, double target, std::size_t window = score_window)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum += v[i];
        if (i >= window) {
            sum -= v[i - window];
        }
        if (i + 1 >= window && sum / static_cast<double>(window) >= target) {
            return i + 1;
        }
    }
    return 0;
}

inline double run_score(const RunMetrics& r) { return tail_mean(r.fractions); }

inline std::vector<EpisodeRow> episode_rows(const std::vector<RunMetrics>& runs)
{
    std::vector<EpisodeRow> out;
    for (const RunMetrics& r : runs) {
        for (std::size_t e = 0; e < r.episodes(); ++e) {
            out.push_back({r.cell, r.method, r.n_drones, r.seed, e + 1, r.totals[e], r.best_total, r.fractions[e],
                           r.per_agent[e], r.final_cells[e]});
        }
    }
    return out;
}

/// Groups by (cell, method, n_drones) in first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<RunMetrics>& runs)
{
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> scores, convergence;
    for (const RunMetrics& r : runs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.cell == r.cell && s.method == r.method && s.n_drones == r.n_drones;
        });
        if (it == out.end()) {
            out.push_back({r.cell, r.method, r.n_drones});
            scores.emplace_back();
            convergence.emplace_back();
            it = out.end() - 1;
        }
        const auto g = static_cast<std::size_t>(it - out.begin());
        if (r.failed || r.episodes() == 0) {
            ++it->failed;
            continue;
        }
        ++it->runs;
        scores[g].push_back(run_score(r));
        convergence[g].push_back(static_cast<double>(convergence_episode(r.fractions)));
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        if (scores[g].empty()) {
            out[g].mean = out[g].median = out[g].q1 = out[g].q3 = out[g].convergence_median = std::nan("");
            continue;
        }
        out[g].mean = mean_of(scores[g]);
        out[g].median = quantile(scores[g], 0.5);
        out[g].q1 = quantile(scores[g], 0.25);
        out[g].q3 = quantile(scores[g], 0.75);
        out[g].convergence_median = quantile(convergence[g], 0.5);
    }
    return out;
}

inline const SummaryRow* find_summary(const std::vector<SummaryRow>& rows, const std::string& method, int n_drones,
                                      const std::string& cell = "default")
{
    for (const SummaryRow& s : rows) {
        if (s.method == method && s.n_drones == n_drones && s.cell == cell) {
            return &s;
        }
    }
    return nullptr;
}

// ---- text encoding ----

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") {
        return std::nan("");
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error("bad number '" + s + "'");
    }
    return v;
}

template <class T>
T parse_integer(const std::string& s)
{
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error("bad integer '" + s + "'");
    }
    return v;
}

inline std::string join_counts(const std::vector<int>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ";" : "") + std::to_string(v[i]);
    }
    return out;
}

inline std::string join_cells(const std::vector<radio::Cell>& v)
{
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ";" : "") + std::to_string(v[i].col) + ":" + std::to_string(v[i].row);
    }
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    if (s.empty()) {
        return out;
    }
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(sep, start);
        out.push_back(s.substr(start, end - start));
        if (end == std::string::npos) {
            return out;
        }
        start = end + 1;
    }
}

/// Labels and diagnostics may hold commas or quotes; those fields are quoted.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    }
    return out + "\"";
}

inline std::vector<std::string> parse_csv_line(const std::string& line)
{
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else {
            out.back() += c;
        }
    }
    return out;
}

inline std::ofstream open_output(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path)
{
    out.close();
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

inline void write_rows_csv(const std::vector<RunMetrics>& runs, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << rows_header << '\n';
    for (const EpisodeRow& r : episode_rows(runs)) {
        out << csv_field(r.cell) << ',' << r.method << ',' << r.n_drones << ',' << r.seed << ',' << r.episode << ','
            << r.total_connected << ',' << r.best_total << ',' << format_double(r.fraction_of_best) << ','
            << join_counts(r.per_agent) << ',' << join_cells(r.final_cells) << '\n';
    }
    close_output(out, path);
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << summary_header << '\n';
    for (const SummaryRow& s : rows) {
        out << csv_field(s.cell) << ',' << s.method << ',' << s.n_drones << ',' << s.runs << ',' << s.failed << ','
            << format_double(s.mean) << ',' << format_double(s.median) << ',' << format_double(s.q1) << ','
            << format_double(s.q3) << ',' << format_double(s.convergence_median) << '\n';
    }
    close_output(out, path);
}

inline void write_failures_csv(const std::vector<RunMetrics>& runs, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << failures_header << '\n';
    for (const RunMetrics& r : runs) {
        if (r.failed) {
            out << csv_field(r.cell) << ',' << r.method << ',' << r.n_drones << ',' << r.seed << ','
                << csv_field(r.diagnostic) << '\n';
        }
    }
    close_output(out, path);
}

/// Wall-clock per run; kept apart so the other exports stay byte-identical across runs.
inline void write_timing_csv(const std::vector<RunMetrics>& runs, const std::filesystem::path& path)
{
    std::ofstream out = open_output(path);
    out << "cell,method,n_drones,seed,wall_clock_s\n";
    for (const RunMetrics& r : runs) {
        out << csv_field(r.cell) << ',' << r.method << ',' << r.n_drones << ',' << r.seed << ','
            << format_double(r.wall_clock_s) << '\n';
    }
    close_output(out, path);
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read '" + path.string() + "'");
    }
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw Error("'" + path.string() + "' does not start with the expected header");
    }
    const std::size_t columns = split(header, ',').size();
    std::vector<std::vector<std::string>> out;
    while (std::getline(in, line)) {
        auto fields = parse_csv_line(line);
        if (fields.size() != columns) {
            throw Error("'" + path.string() + "': row with " + std::to_string(fields.size()) + " columns");
        }
        out.push_back(std::move(fields));
    }
    return out;
}

inline std::vector<EpisodeRow> read_rows_csv(const std::filesystem::path& path)
{
    std::vector<EpisodeRow> out;
    for (const auto& f : read_csv(path, rows_header)) {
        EpisodeRow r;
        r.cell = f[0];
        r.method = f[1];
        r.n_drones = parse_integer<int>(f[2]);
        r.seed = parse_integer<std::uint64_t>(f[3]);
        r.episode = parse_integer<std::size_t>(f[4]);
        r.total_connected = parse_integer<int>(f[5]);
        r.best_total = parse_integer<int>(f[6]);
        r.fraction_of_best = parse_double(f[7]);
        for (const std::string& s : split(f[8], ';')) {
            r.per_agent.push_back(parse_integer<int>(s));
        }
        for (const std::string& s : split(f[9], ';')) {
            const auto parts = split(s, ':');
            if (parts.size() != 2) {
                throw Error("bad cell '" + s + "'");
            }
            r.final_cells.push_back({parse_integer<int>(parts[0]), parse_integer<int>(parts[1])});
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<SummaryRow> read_summary_csv(const std::filesystem::path& path)
{
    std::vector<SummaryRow> out;
    for (const auto& f : read_csv(path, summary_header)) {
        out.push_back({f[0], f[1], parse_integer<int>(f[2]), parse_integer<std::size_t>(f[3]),
                       parse_integer<std::size_t>(f[4]), parse_double(f[5]), parse_double(f[6]), parse_double(f[7]),
                       parse_double(f[8]), parse_double(f[9])});
    }
    return out;
}

inline nlohmann::json to_json(const std::vector<RunMetrics>& runs)
{
    using nlohmann::json;
    json j;
    j["schema"] = 1;
    j["runs"] = json::array();
    for (const RunMetrics& r : runs) {
        json run{{"cell", r.cell},
                 {"method", r.method},
                 {"n_drones", r.n_drones},
                 {"seed", r.seed},
                 {"n_users", r.n_users},
                 {"field_digest", r.field_digest},
                 {"best_total", r.best_total},
                 {"failed", r.failed},
                 {"diagnostic", r.diagnostic},
                 {"episodes", json::array()}};
        for (std::size_t e = 0; e < r.episodes(); ++e) {
            json cells = json::array();
            for (const radio::Cell& c : r.final_cells[e]) {
                cells.push_back({c.col, c.row});
            }
            run["episodes"].push_back({{"episode", e + 1},
                                       {"total_connected", r.totals[e]},
                                       {"fraction_of_best", r.fractions[e]},
                                       {"per_agent", r.per_agent[e]},
                                       {"final_cells", cells}});
        }
        j["runs"].push_back(std::move(run));
    }
    j["summary"] = json::array();
    for (const SummaryRow& s : summarize(runs)) {
        auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
        j["summary"].push_back({{"cell", s.cell},
                                {"method", s.method},
                                {"n_drones", s.n_drones},
                                {"runs", s.runs},
                                {"failed", s.failed},
                                {"mean", num(s.mean)},
                                {"median", num(s.median)},
                                {"q1", num(s.q1)},
                                {"q3", num(s.q3)},
                                {"convergence_median", num(s.convergence_median)}});
    }
    return j;
}

inline std::vector<RunMetrics> runs_from_json(const nlohmann::json& j)
{
    require(j.value("schema", 0) == 1, "metrics json: unsupported schema");
    std::vector<RunMetrics> out;
    for (const auto& run : j.at("runs")) {
        RunMetrics r;
        r.cell = run.at("cell");
        r.method = run.at("method");
        r.n_drones = run.at("n_drones");
        r.seed = run.at("seed");
        r.n_users = run.at("n_users");
        r.field_digest = run.at("field_digest");
        r.best_total = run.at("best_total");
        r.failed = run.at("failed");
        r.diagnostic = run.at("diagnostic");
        for (const auto& e : run.at("episodes")) {
            r.totals.push_back(e.at("total_connected"));
            r.fractions.push_back(e.at("fraction_of_best"));
            r.per_agent.push_back(e.at("per_agent").get<std::vector<int>>());
            std::vector<radio::Cell> cells;
            for (const auto& c : e.at("final_cells")) {
                cells.push_back({c.at(0).get<int>(), c.at(1).get<int>()});
            }
            r.final_cells.push_back(std::move(cells));
        }
        out.push_back(std::move(r));
    }
    return out;
}

enum class ExportFormat { csv, json, both };

inline ExportFormat parse_format(const std::string& s)
{
    if (s == "csv") {
        return ExportFormat::csv;
    }
    if (s == "json") {
        return ExportFormat::json;
    }
    if (s == "both") {
        return ExportFormat::both;
    }
    throw ConfigError("unknown export format '" + s + "' (csv, json, both)");
}

/// rows.csv, summary.csv, failures.csv and/or metrics.json under `dir`.
inline void export_metrics(const std::vector<RunMetrics>& runs, ExportFormat format, const std::filesystem::path& dir)
{
    if (format != ExportFormat::json) {
        write_rows_csv(runs, dir / "rows.csv");
        write_summary_csv(summarize(runs), dir / "summary.csv");
        write_failures_csv(runs, dir / "failures.csv");
    }
    if (format != ExportFormat::csv) {
        const auto path = dir / "metrics.json";
        std::ofstream out = open_output(path);
        out << to_json(runs).dump(1) << '\n';
        close_output(out, path);
    }
}

} // namespace airgan::harness
