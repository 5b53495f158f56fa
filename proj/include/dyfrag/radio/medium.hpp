#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "dyfrag/core/engine.hpp"
#include "dyfrag/core/rng.hpp"
#include "dyfrag/radio/frame.hpp"

namespace dyfrag {

struct Position {
    double x = 0.0;
    double y = 0.0;
};

/// Node placements are indexed by node id; ids must be 0..n-1.
struct NodePlacement {
    NodeId id = 0;
    Position pos;
};

enum class Verdict : std::uint8_t { Delivered, LostCollision, LostChannel };

const char* to_string(Verdict v);

/// One transmission on the air. end = start + frame.airtime.
struct OngoingTx {
    std::uint64_t id = 0;
    Frame frame;
    SimTime start{};
    SimTime end{};
};

class RadioListener {
public:
    virtual ~RadioListener() = default;
    /// Called at the end of every frame the node could hear, whatever the verdict.
    virtual void on_frame(const Frame& frame, Verdict verdict) = 0;
    /// Called on the sender when its own transmission ends.
    virtual void on_tx_end(const Frame& /*frame*/) {}
};

struct MediumConfig {
    double range_m = 50.0;
    double p_edge = 0.9;
    int num_channels = 1;
};

/// Success probability at distance d: 1 - (1 - p_edge) (d/R)^2 inside the disk, 0 outside.
double reception_probability(double d, double range, double p_edge);

/// Sink at the origin (node 0), sources 1..n evenly spaced on a circle.
std::vector<NodePlacement> circular_layout(int sources, double radius);

/// Unit-disk medium with distance loss and all-or-nothing collisions.
///
/// Any two frames that overlap in time on one channel are both lost at every
/// receiver that hears both senders; a node's own transmission counts as an
/// interferer (half duplex). Every node listens on every channel and has one
/// transmitter per channel; only the multi-channel sink ever uses more than one.
class Medium {
public:
    Medium(Engine& engine, MediumConfig config, std::vector<NodePlacement> nodes,
           std::uint64_t master_seed);

    Medium(const Medium&) = delete;
    Medium& operator=(const Medium&) = delete;

    void attach(NodeId node, RadioListener* listener);

    int node_count() const { return static_cast<int>(positions_.size()); }
    const MediumConfig& config() const { return config_; }

    double distance(NodeId a, NodeId b) const;
    bool in_range(NodeId a, NodeId b) const;

    /// Puts the frame on the air at the current clock. Verdicts are handed to
    /// listeners when the frame ends.
    const OngoingTx& transmit(Frame frame);

    /// Any in-range transmission on the channel is on the air right now.
    bool carrier_sense(NodeId node, int channel) const;
    /// Any in-range transmission on the channel overlaps [t0, t1].
    bool busy_during(NodeId node, int channel, SimTime t0, SimTime t1) const;
    /// End of the last audible transmission currently on the air, or now() if idle.
    SimTime idle_at(NodeId node, int channel) const;
    /// On any channel.
    bool transmitting(NodeId node) const;
    bool transmitting(NodeId node, int channel) const;

    void enable_log(bool on) { log_enabled_ = on; }
    const std::vector<OngoingTx>& log() const { return log_; }

    std::uint64_t frames_sent() const { return next_tx_id_ - 1; }

private:
    bool audible(NodeId listener, NodeId sender) const {
        return listener == sender || reach_[index(listener, sender)];
    }
    std::size_t index(NodeId a, NodeId b) const {
        return static_cast<std::size_t>(a) * positions_.size() + static_cast<std::size_t>(b);
    }
    std::size_t busy_index(NodeId node, int channel) const {
        return static_cast<std::size_t>(node) * static_cast<std::size_t>(config_.num_channels) +
               static_cast<std::size_t>(channel);
    }
    void check_node(NodeId node) const;
    void finish(std::uint64_t tx_id, int channel);
    Verdict judge(const OngoingTx& tx, NodeId receiver);
    void prune(int channel);

    Engine& engine_;
    MediumConfig config_;
    std::vector<Position> positions_;
    std::vector<char> reach_;
    std::vector<double> success_;
    std::vector<RadioListener*> listeners_;
    std::vector<RngStream> loss_rng_;
    std::vector<std::deque<OngoingTx>> recent_;  // per channel, ordered by start
    std::vector<SimTime> tx_busy_until_;
    std::uint64_t next_tx_id_ = 1;
    bool log_enabled_ = false;
    std::vector<OngoingTx> log_;
};

}  // namespace dyfrag
