#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_set>
#include <vector>

#include "dyfrag/core/errors.hpp"
#include "dyfrag/core/time.hpp"

namespace dyfrag {

enum class EventKind : std::uint8_t {
    PacketArrival,
    FrameTxStart,
    FrameRxEnd,
    TimerExpiry,
    AssessmentCycleEnd,
    SuperframeBoundary,
};

const char* to_string(EventKind kind);

struct EventHandle {
    std::uint64_t seq = 0;
    constexpr bool valid() const { return seq != 0; }
};

struct TraceEntry {
    SimTime time;
    std::uint64_t seq;
    EventKind kind;
    NodeId target;

    bool operator==(const TraceEntry&) const = default;
};

struct RunTrace {
    std::vector<TraceEntry> events;  // empty unless recording is enabled
    std::uint64_t processed = 0;
    std::uint64_t digest = 0;
};

/// Single-threaded discrete-event engine.
///
/// Events pop in (time, seq) order where seq is the scheduling order, so
/// same-time events fire in the order they were scheduled. Every processed
/// event is folded into a 64-bit FNV-1a digest over (time, seq, kind, target).
class Engine {
public:
    using Action = std::function<void()>;

    explicit Engine(bool record_events = false);

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    SimTime now() const { return now_; }

    /// Queues an event. Scheduling before now() throws ContractViolation.
    EventHandle schedule(SimTime at, EventKind kind, NodeId target, Action action);
    EventHandle schedule_in(SimTime delay, EventKind kind, NodeId target, Action action) {
        return schedule(now_ + delay, kind, target, std::move(action));
    }

    /// True if the event was still pending and is now inert.
    bool cancel(EventHandle handle);
    bool is_pending(EventHandle handle) const;

    /// Processes every event with time <= t_end, then sets the clock to t_end.
    RunTrace run_until(SimTime t_end);

    std::uint64_t digest() const { return digest_; }
    std::uint64_t processed() const { return processed_; }
    std::size_t queued() const { return pending_.size(); }

private:
    struct Item {
        SimTime time;
        std::uint64_t seq;
        EventKind kind;
        NodeId target;
        Action action;
    };
    struct Later {
        bool operator()(const Item& a, const Item& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    void fold(const Item& item);

    SimTime now_{};
    std::uint64_t next_seq_ = 1;
    std::vector<Item> heap_;
    std::unordered_set<std::uint64_t> pending_;
    bool record_;
    std::vector<TraceEntry> recorded_;
    std::uint64_t digest_;
    std::uint64_t processed_ = 0;
};

}  // namespace dyfrag
