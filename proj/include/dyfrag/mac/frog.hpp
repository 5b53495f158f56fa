#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "dyfrag/core/engine.hpp"
#include "dyfrag/core/rng.hpp"
#include "dyfrag/mac/frag_controller.hpp"
#include "dyfrag/radio/medium.hpp"
#include "dyfrag/traffic/metrics.hpp"

namespace dyfrag {

/// Timing and sizing for the fragmenting CSMA/CA MAC. Defaults are in ticks (us).
struct FrogConfig {
    int fragment_size = 16;
    AirtimeModel airtime{};
    SimTime gap = SimTime::us(640);
    SimTime cca = SimTime::us(128);
    SimTime backoff_unit = SimTime::us(320);
    int min_be = 3;
    int max_be = 5;
    int max_retries = 4;
    SimTime cts_wait = SimTime::ms(1);
    SimTime ack_wait = SimTime::ms(1);
    /// Normal-class CCA also requires the channel to have been idle this long,
    /// so an urgent contender reacting to the same idle edge always wins.
    SimTime priority_ifs = SimTime::us(256);
    /// Urgent contenders wait for an idle channel, then defer a random
    /// number of jitter slots before their CCA.
    int urgent_jitter_slots = 4;
    SimTime urgent_jitter_unit = SimTime::us(32);
    /// The sink forgets a normal stream after this long without hearing from it.
    SimTime stream_timeout = SimTime::ms(10);

    SimTime rts_airtime() const { return airtime.control(); }
    SimTime cts_airtime() const { return airtime.control(); }
    SimTime ack_airtime() const { return airtime.control(); }
    SimTime data_airtime(int units) const { return airtime.airtime(units); }
    /// Worst-case urgent reaction inside a pause: jitter + CCA + RTS + CTS.
    SimTime urgent_handshake() const {
        return urgent_jitter_unit * (urgent_jitter_slots - 1) + cca + rts_airtime() + cts_airtime();
    }

    /// Throws ConfigError. The pause must fit a full urgent jitter + CCA + RTS.
    void validate() const;
};

enum class MacPhase : std::uint8_t {
    Idle,
    Backoff,
    AwaitCts,
    SendingFragments,
    PausedForUrgent,
    AwaitAck,
};

const char* to_string(MacPhase phase);

/// A normal sender's suspension interval while an urgent exchange runs.
struct PauseRecord {
    NodeId node = 0;
    std::uint64_t urgent_packet = 0;
    SimTime start{};
    SimTime end{};  // equals start until the pause ends
    bool by_guard = false;
};

/// Fragment-size change observed at the sink (DyFrag only).
struct SizeChange {
    SimTime time{};
    int size = 0;
    enum class Cause : std::uint8_t { Urgent, CycleEnd } cause = Cause::Urgent;

    bool operator==(const SizeChange&) const = default;
};

struct MacLog {
    std::vector<PauseRecord> pauses;
    std::vector<SizeChange> sizes;
};

/// Source of the fragment size the sink grants with each CTS.
class FragmentPolicy {
public:
    virtual ~FragmentPolicy() = default;
    virtual int fragment_size() const = 0;
    /// The sink saw an urgent packet (RTS or delivery) for the first time.
    virtual void observe_urgent(std::uint64_t packet_id) = 0;
};

class FixedFragmentPolicy final : public FragmentPolicy {
public:
    explicit FixedFragmentPolicy(int size) : size_(size) {}
    int fragment_size() const override { return size_; }
    void observe_urgent(std::uint64_t) override {}

private:
    int size_;
};

/// DyFrag controller driven by engine timers: urgent arrivals halve the size
/// and restart the assessment cycle; quiet cycle ends double it.
class DyFragPolicy final : public FragmentPolicy {
public:
    DyFragPolicy(Engine& engine, NodeId owner, DyFragParams params, MacLog* log);

    int fragment_size() const override { return controller_.current(); }
    void observe_urgent(std::uint64_t packet_id) override;

    const FragController& controller() const { return controller_; }

private:
    void arm_cycle();
    void cycle_end();

    Engine& engine_;
    NodeId owner_;
    DyFragParams params_;
    FragController controller_;
    EventHandle cycle_timer_;
    std::set<std::uint64_t> seen_;
    MacLog* log_;
};

/// Source node running the fragmenting MAC.
///
/// Urgent packets go first and are never fragmented. Normal packets are sent
/// as a fragment stream with a pause after every fragment; overhearing an
/// urgent CTS inside a pause suspends the stream until the urgent ACK is
/// overheard (or a guard timer expires), then the stream resumes where it
/// stopped.
class FragNode final : public RadioListener {
public:
    FragNode(NodeId id, NodeId sink, Engine& engine, Medium& medium, const FrogConfig& config,
             Metrics& metrics, MacLog* log, std::uint64_t master_seed);

    void enqueue(const Packet& packet);

    NodeId id() const { return id_; }
    MacPhase phase() const { return phase_; }
    int backoff_exponent() const;
    int retry_count() const;
    /// Packets the node still owns: queued, in service or suspended.
    std::vector<Packet> held_packets() const;
    int fragments_sent() const { return fragments_sent_; }

    void on_frame(const Frame& frame, Verdict verdict) override;
    void on_tx_end(const Frame& frame) override;

private:
    enum class Job : std::uint8_t { None, Urgent, Normal };

    struct Attempt {
        int be = 0;
        int retries = 0;
    };
    struct NormalJob {
        Packet packet;
        Attempt attempt;
        std::vector<int> plan;     // units per fragment, fixed at first grant
        std::vector<int> pending;  // fragment indices in the current burst
        std::size_t cursor = 0;
        bool granted = false;
    };
    struct UrgentJob {
        Packet packet;
        Attempt attempt;
    };

    Attempt& attempt();
    const Packet& job_packet() const;

    void start_next();
    void begin_urgent();
    void urgent_access();
    void urgent_cca(SimTime start);
    void normal_access();
    void normal_backoff_done();
    void normal_cca(SimTime start);
    void channel_busy_retry();
    void send_rts();
    void on_grant(const Frame& cts);
    void send_next_fragment();
    void gap_end();
    void suspend_stream_for_own_urgent();
    void pause_for(const Frame& cts);
    void resume(bool by_guard);
    void on_response_timeout();
    void on_ack(const Frame& ack);
    void finish_job();
    void drop_job();
    void random_backoff_then(void (FragNode::*next)());
    SimTime stream_duration_after(std::size_t next_cursor) const;
    void cancel_timers();

    NodeId id_;
    NodeId sink_;
    Engine& engine_;
    Medium& medium_;
    const FrogConfig& cfg_;
    Metrics& metrics_;
    MacLog* log_;
    RngStream rng_;

    std::deque<Packet> urgent_q_;
    std::deque<Packet> normal_q_;
    std::optional<UrgentJob> urgent_;
    std::optional<NormalJob> normal_;
    Job active_ = Job::None;
    MacPhase phase_ = MacPhase::Idle;
    bool stream_suspended_ = false;

    SimTime nav_until_{};
    std::uint64_t paused_for_ = 0;
    std::size_t pause_index_ = 0;

    EventHandle access_timer_;
    EventHandle response_timer_;
    EventHandle gap_timer_;
    EventHandle guard_timer_;
    int fragments_sent_ = 0;
};

/// Sink: arbitrates RTS, reassembles fragments and records deliveries.
///
/// A normal RTS is granted only when no other stream holds the sink; an
/// urgent RTS is granted even in the middle of a normal stream. Each CTS
/// carries the fragment size from the policy and any fragments still missing
/// from an earlier attempt.
class FragSink final : public RadioListener {
public:
    FragSink(NodeId id, Engine& engine, Medium& medium, const FrogConfig& config, Metrics& metrics,
             FragmentPolicy& policy);

    void on_frame(const Frame& frame, Verdict verdict) override;

    std::optional<NodeId> stream_holder() const;
    std::optional<NodeId> urgent_holder() const;
    /// Fragment indices received for a packet, in arrival order (duplicates included).
    const std::vector<int>& arrivals(std::uint64_t packet_id) const;

private:
    struct Holder {
        NodeId node = 0;
        std::uint64_t packet = 0;
        EventHandle timer;
    };
    struct Assembly {
        int count = 0;
        std::vector<char> have;
        std::vector<int> arrivals;
    };

    void handle_rts(const Frame& rts);
    void handle_data(const Frame& data);
    void send(FrameKind kind, NodeId to, FrameMeta meta);
    std::vector<int> missing_of(std::uint64_t packet_id) const;
    void hold_stream(NodeId node, std::uint64_t packet);
    void release_stream();
    void release_urgent();

    NodeId id_;
    Engine& engine_;
    Medium& medium_;
    const FrogConfig& cfg_;
    Metrics& metrics_;
    FragmentPolicy& policy_;

    std::optional<Holder> stream_;
    std::optional<Holder> urgent_;
    std::unordered_map<std::uint64_t, Assembly> assemblies_;
    std::set<std::uint64_t> completed_;
};

}  // namespace dyfrag
