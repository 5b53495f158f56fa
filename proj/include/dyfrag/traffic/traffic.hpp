#pragma once

#include <cstdint>
#include <vector>

#include "dyfrag/core/rng.hpp"
#include "dyfrag/radio/frame.hpp"

namespace dyfrag {

enum class ArrivalProcess : std::uint8_t { Poisson, Periodic };

struct TrafficProfile {
    NodeId node = 1;
    double normal_rate = 2.0;  // packets / s
    double urgent_rate = 0.5;  // packets / s
    int normal_payload = 64;   // units
    int urgent_payload = 16;   // units
    ArrivalProcess process = ArrivalProcess::Poisson;

    void validate() const;
    double rate(Priority p) const { return p == Priority::Urgent ? urgent_rate : normal_rate; }
    int payload(Priority p) const { return p == Priority::Urgent ? urgent_payload : normal_payload; }
};

/// Packet ids encode (node, class, sequence) so they are stable across protocols.
std::uint64_t make_packet_id(NodeId node, Priority cls, std::uint32_t seq);

/// Arrivals of one class in [0, horizon). Poisson: exponential gaps with mean
/// 1/rate. Periodic: spacing 1/rate starting at a random phase in [0, 1/rate).
std::vector<Packet> generate_arrivals(const TrafficProfile& profile, Priority cls, SimTime horizon,
                                      RngStream& stream);

/// Both classes, each drawn from its own (node, class) stream, merged by time.
std::vector<Packet> generate_arrivals(const TrafficProfile& profile, SimTime horizon,
                                      std::uint64_t master_seed);

}  // namespace dyfrag
