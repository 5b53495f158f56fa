#include "dyfrag/core/engine.hpp"

#include <algorithm>

namespace dyfrag {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void fnv_mix(std::uint64_t& h, std::uint64_t value, int bytes) {
    for (int i = 0; i < bytes; ++i) {
        h ^= (value >> (8 * i)) & 0xffu;
        h *= kFnvPrime;
    }
}

}  // namespace

const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::PacketArrival: return "PacketArrival";
        case EventKind::FrameTxStart: return "FrameTxStart";
        case EventKind::FrameRxEnd: return "FrameRxEnd";
        case EventKind::TimerExpiry: return "TimerExpiry";
        case EventKind::AssessmentCycleEnd: return "AssessmentCycleEnd";
        case EventKind::SuperframeBoundary: return "SuperframeBoundary";
    }
    return "?";
}

Engine::Engine(bool record_events) : record_(record_events), digest_(kFnvOffset) {}

EventHandle Engine::schedule(SimTime at, EventKind kind, NodeId target, Action action) {
    if (at < now_) {
        throw ContractViolation("schedule: event time " + std::to_string(at.ticks) +
                                " precedes clock " + std::to_string(now_.ticks));
    }
    const std::uint64_t seq = next_seq_++;
    heap_.push_back(Item{at, seq, kind, target, std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    pending_.insert(seq);
    return EventHandle{seq};
}

bool Engine::cancel(EventHandle handle) {
    if (!handle.valid()) return false;
    return pending_.erase(handle.seq) > 0;
}

bool Engine::is_pending(EventHandle handle) const {
    return handle.valid() && pending_.count(handle.seq) > 0;
}

void Engine::fold(const Item& item) {
    fnv_mix(digest_, static_cast<std::uint64_t>(item.time.ticks), 8);
    fnv_mix(digest_, item.seq, 8);
    fnv_mix(digest_, static_cast<std::uint64_t>(item.kind), 1);
    fnv_mix(digest_, static_cast<std::uint64_t>(static_cast<std::uint32_t>(item.target)), 4);
    ++processed_;
    if (record_) recorded_.push_back(TraceEntry{item.time, item.seq, item.kind, item.target});
}

RunTrace Engine::run_until(SimTime t_end) {
    if (t_end < now_) {
        throw ContractViolation("run_until: end time precedes clock");
    }
    while (!heap_.empty() && heap_.front().time <= t_end) {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Item item = std::move(heap_.back());
        heap_.pop_back();
        if (pending_.erase(item.seq) == 0) continue;  // cancelled
        now_ = item.time;
        fold(item);
        if (item.action) item.action();
    }
    now_ = t_end;
    return RunTrace{recorded_, processed_, digest_};
}

}  // namespace dyfrag
