#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dyfrag/exp/network.hpp"

namespace dyfrag {

/// One CSV line: one (scenario cell, seed, class).
struct ResultRow {
    std::string scenario_id;
    Protocol protocol = Protocol::Frog;
    int nodes = 0;                      // source count
    std::optional<int> fragment_size;   // FROG only
    std::uint64_t seed = 0;
    Priority cls = Priority::Normal;
    std::optional<double> avg_delay_s;  // nullopt when nothing was delivered
    double throughput = 0.0;            // units / s
    std::int64_t drop_count = 0;
    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    std::int64_t in_flight = 0;
    std::uint64_t trace_digest = 0;
    std::string error;                  // empty on success

    bool operator==(const ResultRow&) const = default;
};

/// "FROG-n4-f16": protocol, source count and fragment-size axis value.
std::string scenario_id(Protocol protocol, int sources, int fragment_axis);

/// Two rows (normal, urgent) for one finished run.
std::vector<ResultRow> rows_for(const Scenario& sc, const RunResult& run, const std::string& id);

/// One run per seed, two rows each. Throws ConfigError on an empty seed list.
std::vector<ResultRow> run_experiment(const Scenario& sc, const std::vector<std::uint64_t>& seeds);

struct SweepAxes {
    std::vector<Protocol> protocols;
    std::vector<int> node_counts;
    std::vector<int> fragment_sizes;
    std::vector<std::uint64_t> seeds;
};

struct SweepOptions {
    int threads = 1;
    /// Run every cell twice and record a mismatch in the error column.
    bool verify_determinism = false;
};

/// Full cross-product over the axes, sorted by (protocol, nodes, fragment, seed, class).
/// A failing cell yields rows with the error column set; the sweep continues.
std::vector<ResultRow> sweep(const Scenario& base, const SweepAxes& axes, const SweepOptions& options = {});

inline constexpr const char* kCsvHeader =
    "scenario_id,protocol,nodes,fragment_size,seed,class,avg_delay_s,throughput_units_per_s,"
    "drop_count,generated,delivered,in_flight,trace_digest,error";

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows);
/// Inverse of write_csv. Throws ConfigError on malformed input.
std::vector<ResultRow> parse_csv(std::istream& in);

}  // namespace dyfrag
