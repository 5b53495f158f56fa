#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dyfrag/core/engine.hpp"
#include "dyfrag/core/rng.hpp"
#include "dyfrag/radio/medium.hpp"
#include "dyfrag/traffic/metrics.hpp"

namespace dyfrag {

/// Simplified multi-channel superframe MAC. CAP: slotted CSMA for GTS
/// requests on channel 0. CFP: exclusive (slot, channel) cells.
struct IdsmeConfig {
    SimTime slot = SimTime::ms(2);
    int total_slots = 12;
    int cap_init = 4;
    int cap_min = 2;
    int cap_max = 6;
    int channels = 4;
    int cw_urgent = 8;   // backoff periods
    int cw_normal = 32;  // backoff periods
    SimTime backoff_unit = SimTime::us(320);
    SimTime cca = SimTime::us(128);
    int max_cap_retries = 4;
    int max_retries = 4;
    SimTime ack_wait = SimTime::ms(1);
    /// CAP collision events at the sink that count as "repeated collisions".
    int collision_threshold = 2;
    AirtimeModel airtime{};

    SimTime superframe_length() const { return slot * total_slots; }
    /// CFP cells one packet occupies: DATA plus the sink's ACK.
    int cells_needed(int payload_units) const;
    void validate() const;
};

struct GtsCell {
    NodeId node = 0;
    Priority priority = Priority::Normal;
    std::uint64_t packet_id = 0;
};

struct GtsGrant {
    NodeId node = 0;
    Priority priority = Priority::Normal;
    std::uint64_t packet_id = 0;
    int slot = 0;  // CFP-relative
    int channel = 0;
    int cells = 1;
};

struct Superframe {
    int cap_slots = 0;
    int cfp_slots = 0;
    SimTime slot{};
    int num_channels = 1;
    SimTime start{};
    std::map<std::pair<int, int>, GtsCell> table;  // (CFP slot, channel) -> owner
    std::vector<GtsGrant> grants;

    int grantable_cells() const { return cfp_slots * num_channels; }
    SimTime cap_end() const { return start + slot * cap_slots; }
    SimTime cfp_slot_start(int cfp_slot) const { return start + slot * (cap_slots + cfp_slot); }
};

/// Throws ConfigError unless cap, cfp and channels are all >= 1.
Superframe build_superframe(int cap_slots, int cfp_slots, SimTime slot, int num_channels);

struct GtsRequest {
    NodeId node = 0;
    Priority priority = Priority::Normal;
    int units = 1;
    std::uint64_t packet_id = 0;
};

/// Places urgent requests first, then normal ones, each at the earliest slot
/// and lowest channel with enough consecutive free cells on one channel and
/// no time overlap with the node's other grants. Normal grants only start
/// after the last urgent start cell. Returns the requests that did not fit,
/// in their original order.
std::vector<GtsRequest> allocate_gts(const std::vector<GtsRequest>& requests, Superframe& sf,
                                     const IdsmeConfig& config);

/// One-slot step: a deferred urgent request shrinks the CAP, otherwise
/// repeated CAP collisions grow it. Clamped to [cap_min, cap_max].
int adapt_cap(int cap, bool urgent_deferred, int cap_collisions, const IdsmeConfig& config);

/// Slotted-CSMA outcome for one round: index of the unique smallest backoff,
/// or nullopt when the smallest draw is shared (collision) or there are no draws.
std::optional<std::size_t> cap_winner(const std::vector<int>& backoffs);

class IdsmeNode;

/// Coordinator: collects requests, runs the superframe clock and hands out GTS.
class IdsmeSink final : public RadioListener {
public:
    IdsmeSink(NodeId id, Engine& engine, Medium& medium, const IdsmeConfig& config, Metrics& metrics);

    /// Nodes are told about each new superframe in registration order.
    void register_node(IdsmeNode* node);
    /// A node gave up on an urgent request in the current CAP.
    void report_urgent_deferral() { urgent_deferred_ = true; }

    NodeId id() const { return id_; }
    const Superframe& superframe() const { return sf_; }
    const std::vector<int>& cap_history() const { return cap_history_; }
    std::size_t pending_requests() const { return pending_.size(); }

    void on_frame(const Frame& frame, Verdict verdict) override;

private:
    void boundary();
    void send(FrameKind kind, NodeId to, int channel, FrameMeta meta);

    NodeId id_;
    Engine& engine_;
    Medium& medium_;
    const IdsmeConfig& cfg_;
    Metrics& metrics_;
    std::vector<IdsmeNode*> nodes_;

    Superframe sf_;
    std::vector<int> cap_history_;
    std::vector<GtsRequest> pending_;  // arrival order, carried across boundaries
    std::set<std::uint64_t> known_;
    std::set<std::uint64_t> completed_;
    bool urgent_deferred_ = false;
    int cap_collisions_ = 0;
    SimTime last_collision_end_{-1};
};

/// Source node: requests GTS in the CAP and sends each packet in its grant.
class IdsmeNode final : public RadioListener {
public:
    IdsmeNode(NodeId id, IdsmeSink& sink, Engine& engine, Medium& medium, const IdsmeConfig& config,
              Metrics& metrics, std::uint64_t master_seed);

    void enqueue(const Packet& packet);
    /// Called by the sink at every boundary with this node's grants.
    void on_superframe(const Superframe& sf, const std::vector<GtsGrant>& grants);

    NodeId id() const { return id_; }
    std::vector<Packet> held_packets() const;
    int cap_retries() const { return cap_retries_; }

    void on_frame(const Frame& frame, Verdict verdict) override;
    void on_tx_end(const Frame& frame) override;

private:
    void start_contention();
    void contend_at(SimTime cca_start);
    void cap_failure();
    void send_data(std::uint64_t packet_id, int channel);
    void data_failure(std::uint64_t packet_id);
    bool has_unrequested_urgent() const;

    NodeId id_;
    IdsmeSink& sink_;
    NodeId sink_id_;
    Engine& engine_;
    Medium& medium_;
    const IdsmeConfig& cfg_;
    Metrics& metrics_;
    RngStream rng_;

    SimTime cap_start_{};
    SimTime cap_end_{};
    std::deque<Packet> unrequested_;
    std::unordered_map<std::uint64_t, Packet> requested_;  // awaiting or holding a grant
    std::unordered_map<std::uint64_t, int> retries_;
    std::vector<std::uint64_t> in_request_;  // ids carried by the request on the air
    bool contending_ = false;
    bool deferred_ = false;
    int cap_retries_ = 0;
    EventHandle cap_timer_;
    std::unordered_map<std::uint64_t, EventHandle> ack_timers_;
};

}  // namespace dyfrag
