#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dyfrag/exp/scenario.hpp"

namespace dyfrag {

struct RunOptions {
    bool record_events = false;
    bool log_frames = false;
    /// Replaces the generated traffic when set.
    std::optional<std::vector<Packet>> scripted;
};

struct RunResult {
    Metrics metrics;
    std::uint64_t digest = 0;
    std::uint64_t events = 0;
    std::array<std::int64_t, 2> in_flight{};  // indexed by Priority
    std::vector<Packet> arrivals;
    std::vector<TraceEntry> trace;   // record_events only
    std::vector<OngoingTx> frames;   // log_frames only
    MacLog mac_log;
    std::vector<int> cap_history;    // IDSME only

    std::int64_t in_flight_of(Priority p) const { return in_flight[static_cast<std::size_t>(p)]; }
};

/// Traffic for every source of the scenario, merged in time order.
std::vector<Packet> scenario_arrivals(const Scenario& sc);

/// Builds the network, runs it to the horizon and collects the results.
/// In-flight counts come from the packets the MACs still hold.
RunResult run_scenario(const Scenario& sc, const RunOptions& options = {});

}  // namespace dyfrag
