#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "dyfrag/radio/frame.hpp"

namespace dyfrag {

struct ClassMetrics {
    std::vector<SimTime> delay_samples;
    std::int64_t delivered_units = 0;
    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    std::int64_t dropped = 0;
};

/// Per-class delay/throughput accumulators for one run.
///
/// Delay is generation-to-full-reassembly at the sink. A packet the sink has
/// already reassembled is never counted as dropped, even if its sender gives
/// up after losing the final ACK.
class Metrics {
public:
    void record_generated(const Packet& packet);
    /// Throws ContractViolation on a second completion or a non-positive delay.
    void record_delivery(const Packet& packet, SimTime t_rx);
    /// Returns false (and records nothing) if the packet was already delivered.
    bool record_drop(const Packet& packet, SimTime t_drop);

    const ClassMetrics& of(Priority cls) const { return classes_[index(cls)]; }

    /// Mean delay in seconds; nullopt when nothing was delivered.
    std::optional<double> avg_delay(Priority cls) const;
    /// Delivered units per second over the horizon.
    double throughput(Priority cls, SimTime horizon) const;

    const Packet& packet(std::uint64_t id) const;
    bool known(std::uint64_t id) const { return status_.count(id) > 0; }
    bool delivered(std::uint64_t id) const;

private:
    enum class State : std::uint8_t { Pending, Delivered, Dropped };
    struct Entry {
        Packet packet;
        State state = State::Pending;
    };

    static std::size_t index(Priority p) { return p == Priority::Urgent ? 1 : 0; }

    std::array<ClassMetrics, 2> classes_{};
    std::unordered_map<std::uint64_t, Entry> status_;
};

}  // namespace dyfrag
