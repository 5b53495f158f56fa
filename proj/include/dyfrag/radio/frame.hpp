#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dyfrag/core/time.hpp"

namespace dyfrag {

enum class Priority : std::uint8_t { Normal = 0, Urgent = 1 };

inline const char* to_string(Priority p) { return p == Priority::Urgent ? "urgent" : "normal"; }

/// Application payload. Priority never changes after generation.
struct Packet {
    std::uint64_t id = 0;
    NodeId source = 0;
    Priority priority = Priority::Normal;
    int payload_units = 1;
    SimTime t_gen{};
};

enum class FrameKind : std::uint8_t { RTS, CTS, DATA, ACK };

const char* to_string(FrameKind kind);

/// Protocol fields carried on top of the on-air frame.
struct FrameMeta {
    Priority priority = Priority::Normal;
    std::uint64_t packet_id = 0;
    int packet_units = 0;
    int fragment_index = 0;
    int fragment_count = 1;
    /// Fragment size granted by the sink (CTS only).
    int fragment_size = 0;
    bool last_in_burst = false;
    /// Channel reservation that follows the end of this frame (virtual carrier sense).
    SimTime duration{};
    /// Fragment indices the sink still lacks (CTS/ACK).
    std::vector<int> missing;
    /// GTS request contents: one entry per pending packet. In a request ACK,
    /// request_ids lists packets the sink already holds.
    std::vector<std::uint64_t> request_ids;
    std::vector<int> request_units;
    std::vector<Priority> request_classes;
};

struct Frame {
    FrameKind kind = FrameKind::DATA;
    NodeId sender = 0;
    NodeId receiver = kBroadcast;
    int channel = 0;
    int payload_units = 0;
    SimTime airtime{};
    FrameMeta meta;
};

/// airtime = overhead + units * per_unit, exactly.
struct AirtimeModel {
    SimTime frame_overhead = SimTime::us(352);
    SimTime per_unit = SimTime::us(64);

    SimTime airtime(int payload_units) const { return frame_overhead + per_unit * payload_units; }
    SimTime control() const { return frame_overhead; }
};

}  // namespace dyfrag
