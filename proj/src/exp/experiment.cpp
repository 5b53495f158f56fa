#include "dyfrag/exp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace dyfrag {

std::string scenario_id(Protocol protocol, int sources, int fragment_axis) {
    return std::string(to_string(protocol)) + "-n" + std::to_string(sources) + "-f" + std::to_string(fragment_axis);
}

std::vector<ResultRow> rows_for(const Scenario& sc, const RunResult& run, const std::string& id) {
    std::vector<ResultRow> rows;
    for (Priority cls : {Priority::Normal, Priority::Urgent}) {
        const ClassMetrics& m = run.metrics.of(cls);
        ResultRow r;
        r.scenario_id = id;
        r.protocol = sc.protocol;
        r.nodes = sc.sources;
        if (sc.protocol == Protocol::Frog) r.fragment_size = sc.frog.fragment_size;
        r.seed = sc.seed;
        r.cls = cls;
        r.avg_delay_s = run.metrics.avg_delay(cls);
        r.throughput = run.metrics.throughput(cls, sc.horizon);
        r.drop_count = m.dropped;
        r.generated = m.generated;
        r.delivered = m.delivered;
        r.in_flight = run.in_flight_of(cls);
        r.trace_digest = run.digest;
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const Scenario& sc, const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) throw ConfigError("at least one seed is required");
    std::vector<ResultRow> rows;
    for (std::uint64_t seed : seeds) {
        Scenario s = sc;
        s.seed = seed;
        const auto part = rows_for(s, run_scenario(s), scenario_id(s.protocol, s.sources, s.frog.fragment_size));
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

namespace {

struct Cell {
    Scenario sc;
    std::string id;
};

std::vector<ResultRow> run_cell(const Cell& cell, bool verify) {
    std::vector<ResultRow> rows;
    try {
        rows = rows_for(cell.sc, run_scenario(cell.sc), cell.id);
        if (verify) {
            const auto again = rows_for(cell.sc, run_scenario(cell.sc), cell.id);
            if (again != rows) {
                for (auto& r : rows) r.error = "nondeterministic: second run differs";
            }
        }
    } catch (const std::exception& e) {
        rows.clear();
        for (Priority cls : {Priority::Normal, Priority::Urgent}) {
            ResultRow r;
            r.scenario_id = cell.id;
            r.protocol = cell.sc.protocol;
            r.nodes = cell.sc.sources;
            if (cell.sc.protocol == Protocol::Frog) r.fragment_size = cell.sc.frog.fragment_size;
            r.seed = cell.sc.seed;
            r.cls = cls;
            r.error = e.what();
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

}  // namespace

std::vector<ResultRow> sweep(const Scenario& base, const SweepAxes& axes, const SweepOptions& options) {
    if (axes.protocols.empty() || axes.node_counts.empty() || axes.fragment_sizes.empty() || axes.seeds.empty()) {
        throw ConfigError("sweep axes must all be non-empty");
    }
    auto protocols = axes.protocols;
    auto nodes = axes.node_counts;
    auto frags = axes.fragment_sizes;
    auto seeds = axes.seeds;
    std::sort(protocols.begin(), protocols.end());
    std::sort(nodes.begin(), nodes.end());
    std::sort(frags.begin(), frags.end());
    std::sort(seeds.begin(), seeds.end());

    std::vector<Cell> cells;
    for (Protocol p : protocols) {
        for (int n : nodes) {
            for (int f : frags) {
                for (std::uint64_t seed : seeds) {
                    Scenario sc = base;
                    sc.protocol = p;
                    sc.sources = n;
                    sc.frog.fragment_size = f;
                    sc.seed = seed;
                    sc.positions.clear();
                    cells.push_back({std::move(sc), scenario_id(p, n, f)});
                }
            }
        }
    }

    std::vector<std::vector<ResultRow>> out(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            out[i] = run_cell(cells[i], options.verify_determinism);
        }
    };
    const int threads = std::max(1, options.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<ResultRow> rows;
    for (auto& part : out) rows.insert(rows.end(), part.begin(), part.end());
    return rows;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string clean(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <typename T>
T field(const std::string& s, int base, std::size_t line, const char* name) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("csv line " + std::to_string(line) + ": bad " + name + " '" + s + "'");
    }
    return v;
}

double real_field(const std::string& s, std::size_t line, const char* name) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("csv line " + std::to_string(line) + ": bad " + name + " '" + s + "'");
    }
    return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.trace_digest));
        out << clean(r.scenario_id) << ',' << to_string(r.protocol) << ',' << r.nodes << ','
            << (r.fragment_size ? std::to_string(*r.fragment_size) : "n/a") << ',' << r.seed << ','
            << to_string(r.cls) << ',' << (r.avg_delay_s ? format_double(*r.avg_delay_s) : "NA") << ','
            << format_double(r.throughput) << ',' << r.drop_count << ',' << r.generated << ',' << r.delivered << ','
            << r.in_flight << ',' << digest << ',' << clean(r.error) << '\n';
    }
}

std::vector<ResultRow> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw ConfigError("csv: missing or unexpected header");
    std::vector<ResultRow> rows;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 14) throw ConfigError("csv line " + std::to_string(n) + ": expected 14 fields");
        ResultRow r;
        r.scenario_id = f[0];
        const auto proto = parse_protocol(f[1]);
        if (!proto) throw ConfigError("csv line " + std::to_string(n) + ": bad protocol '" + f[1] + "'");
        r.protocol = *proto;
        r.nodes = field<int>(f[2], 10, n, "nodes");
        if (f[3] != "n/a") r.fragment_size = field<int>(f[3], 10, n, "fragment_size");
        r.seed = field<std::uint64_t>(f[4], 10, n, "seed");
        if (f[5] == "normal") {
            r.cls = Priority::Normal;
        } else if (f[5] == "urgent") {
            r.cls = Priority::Urgent;
        } else {
            throw ConfigError("csv line " + std::to_string(n) + ": bad class '" + f[5] + "'");
        }
        if (f[6] != "NA") r.avg_delay_s = real_field(f[6], n, "avg_delay_s");
        r.throughput = real_field(f[7], n, "throughput");
        r.drop_count = field<std::int64_t>(f[8], 10, n, "drop_count");
        r.generated = field<std::int64_t>(f[9], 10, n, "generated");
        r.delivered = field<std::int64_t>(f[10], 10, n, "delivered");
        r.in_flight = field<std::int64_t>(f[11], 10, n, "in_flight");
        r.trace_digest = field<std::uint64_t>(f[12], 16, n, "trace_digest");
        r.error = f[13];
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace dyfrag
