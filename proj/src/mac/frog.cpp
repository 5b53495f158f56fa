#include "dyfrag/mac/frog.hpp"

#include <algorithm>
#include <string>

#include "dyfrag/mac/fragment.hpp"

namespace dyfrag {

const char* to_string(MacPhase phase) {
    switch (phase) {
        case MacPhase::Idle: return "IDLE";
        case MacPhase::Backoff: return "BACKOFF";
        case MacPhase::AwaitCts: return "AWAIT_CTS";
        case MacPhase::SendingFragments: return "SENDING_FRAGMENTS";
        case MacPhase::PausedForUrgent: return "PAUSED_FOR_URGENT";
        case MacPhase::AwaitAck: return "AWAIT_ACK";
    }
    return "?";
}

void FrogConfig::validate() const {
    if (fragment_size < 1) throw ConfigError("fragment_size must be >= 1");
    if (airtime.frame_overhead.ticks <= 0 || airtime.per_unit.ticks <= 0) {
        throw ConfigError("airtimes must be positive");
    }
    if (cca.ticks <= 0 || backoff_unit.ticks <= 0) throw ConfigError("cca and backoff unit must be positive");
    if (min_be < 0 || max_be < min_be || max_be > 20) throw ConfigError("need 0 <= min_be <= max_be <= 20");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (urgent_jitter_slots < 1 || urgent_jitter_unit.ticks < 0) {
        throw ConfigError("urgent jitter needs at least one slot");
    }
    if (gap <= cca + rts_airtime()) throw ConfigError("pause must exceed CCA + RTS airtime");
    const SimTime jitter_max = urgent_jitter_unit * (urgent_jitter_slots - 1);
    if (gap <= jitter_max + cca + rts_airtime()) {
        throw ConfigError("pause must fit the urgent jitter, CCA and RTS");
    }
    if (priority_ifs <= jitter_max) throw ConfigError("priority_ifs must exceed the urgent jitter window");
    if (cts_wait.ticks <= 0 || ack_wait.ticks <= 0 || stream_timeout.ticks <= 0) {
        throw ConfigError("timeouts must be positive");
    }
}

// ---------------------------------------------------------------------------
// DyFragPolicy

DyFragPolicy::DyFragPolicy(Engine& engine, NodeId owner, DyFragParams params, MacLog* log)
    : engine_(engine), owner_(owner), params_(params), controller_(params.f_min, params.f_max), log_(log) {
    params_.validate();
    arm_cycle();
}

void DyFragPolicy::arm_cycle() {
    cycle_timer_ = engine_.schedule(engine_.now() + params_.t_assess, EventKind::AssessmentCycleEnd,
                                    owner_, [this] { cycle_end(); });
}

void DyFragPolicy::observe_urgent(std::uint64_t packet_id) {
    if (!seen_.insert(packet_id).second) return;
    controller_.on_urgent_arrival();
    if (log_) log_->sizes.push_back({engine_.now(), controller_.current(), SizeChange::Cause::Urgent});
    engine_.cancel(cycle_timer_);
    arm_cycle();
}

void DyFragPolicy::cycle_end() {
    controller_.on_cycle_end();
    if (log_) log_->sizes.push_back({engine_.now(), controller_.current(), SizeChange::Cause::CycleEnd});
    arm_cycle();
}

// ---------------------------------------------------------------------------
// FragNode

FragNode::FragNode(NodeId id, NodeId sink, Engine& engine, Medium& medium, const FrogConfig& config,
                   Metrics& metrics, MacLog* log, std::uint64_t master_seed)
    : id_(id),
      sink_(sink),
      engine_(engine),
      medium_(medium),
      cfg_(config),
      metrics_(metrics),
      log_(log),
      rng_(master_seed, id, StreamPurpose::Mac) {
    medium_.attach(id_, this);
}

FragNode::Attempt& FragNode::attempt() {
    if (active_ == Job::Urgent) return urgent_->attempt;
    return normal_->attempt;
}

const Packet& FragNode::job_packet() const {
    if (active_ == Job::Urgent) return urgent_->packet;
    return normal_->packet;
}

int FragNode::backoff_exponent() const {
    if (active_ == Job::Urgent) return urgent_->attempt.be;
    if (active_ == Job::Normal) return normal_->attempt.be;
    return cfg_.min_be;
}

int FragNode::retry_count() const {
    if (active_ == Job::Urgent) return urgent_->attempt.retries;
    if (active_ == Job::Normal) return normal_->attempt.retries;
    return 0;
}

std::vector<Packet> FragNode::held_packets() const {
    std::vector<Packet> out(urgent_q_.begin(), urgent_q_.end());
    out.insert(out.end(), normal_q_.begin(), normal_q_.end());
    if (urgent_) out.push_back(urgent_->packet);
    if (normal_) out.push_back(normal_->packet);
    return out;
}

void FragNode::enqueue(const Packet& packet) {
    if (packet.priority == Priority::Urgent) {
        urgent_q_.push_back(packet);
    } else {
        normal_q_.push_back(packet);
    }
    if (phase_ == MacPhase::Idle) {
        start_next();
    } else if (phase_ == MacPhase::Backoff && active_ == Job::Normal &&
               packet.priority == Priority::Urgent) {
        // Abandon the normal contention; it restarts once the urgent packet is out.
        engine_.cancel(access_timer_);
        begin_urgent();
    }
}

void FragNode::start_next() {
    if (urgent_ || !urgent_q_.empty()) {
        begin_urgent();
        return;
    }
    if (normal_ && normal_->granted && stream_suspended_) {
        stream_suspended_ = false;
        active_ = Job::Normal;
        phase_ = MacPhase::SendingFragments;
        gap_timer_ = engine_.schedule_in(cfg_.gap, EventKind::TimerExpiry, id_, [this] { gap_end(); });
        return;
    }
    if (normal_ || !normal_q_.empty()) {
        if (!normal_) {
            normal_ = NormalJob{normal_q_.front(), Attempt{cfg_.min_be, 0}, {}, {}, 0, false};
            normal_q_.pop_front();
        }
        active_ = Job::Normal;
        normal_access();
        return;
    }
    active_ = Job::None;
    phase_ = MacPhase::Idle;
}

void FragNode::begin_urgent() {
    if (!urgent_) {
        urgent_ = UrgentJob{urgent_q_.front(), Attempt{cfg_.min_be, 0}};
        urgent_q_.pop_front();
    }
    active_ = Job::Urgent;
    urgent_access();
}

void FragNode::urgent_access() {
    phase_ = MacPhase::Backoff;
    const SimTime now = engine_.now();
    const SimTime idle = medium_.idle_at(id_, 0);
    if (idle > now) {
        access_timer_ = engine_.schedule(idle, EventKind::TimerExpiry, id_, [this] { urgent_access(); });
        return;
    }
    const auto slots = static_cast<std::uint64_t>(cfg_.urgent_jitter_slots);
    const SimTime start = now + cfg_.urgent_jitter_unit * static_cast<std::int64_t>(rng_.below(slots));
    access_timer_ = engine_.schedule(start + cfg_.cca, EventKind::TimerExpiry, id_,
                                     [this, start] { urgent_cca(start); });
}

void FragNode::urgent_cca(SimTime start) {
    if (medium_.busy_during(id_, 0, start, engine_.now())) {
        channel_busy_retry();
    } else {
        send_rts();
    }
}

void FragNode::normal_access() {
    phase_ = MacPhase::Backoff;
    const auto window = std::uint64_t{1} << normal_->attempt.be;
    const auto slots = static_cast<std::int64_t>(rng_.below(window));
    access_timer_ = engine_.schedule_in(cfg_.backoff_unit * slots, EventKind::TimerExpiry, id_,
                                        [this] { normal_backoff_done(); });
}

void FragNode::normal_backoff_done() {
    const SimTime now = engine_.now();
    if (now < nav_until_) {
        // Virtual carrier sense: wait out the reservation, then back off afresh.
        access_timer_ = engine_.schedule(nav_until_, EventKind::TimerExpiry, id_, [this] { normal_access(); });
        return;
    }
    access_timer_ = engine_.schedule(now + cfg_.cca, EventKind::TimerExpiry, id_,
                                     [this, now] { normal_cca(now); });
}

void FragNode::normal_cca(SimTime start) {
    if (medium_.busy_during(id_, 0, start - cfg_.priority_ifs, engine_.now())) {
        channel_busy_retry();
    } else {
        send_rts();
    }
}

void FragNode::channel_busy_retry() {
    Attempt& a = attempt();
    a.retries += 1;
    a.be = std::min(a.be + 1, cfg_.max_be);
    if (a.retries > cfg_.max_retries) {
        drop_job();
        return;
    }
    if (active_ == Job::Urgent) {
        urgent_access();
    } else {
        normal_access();
    }
}

void FragNode::random_backoff_then(void (FragNode::*next)()) {
    phase_ = MacPhase::Backoff;
    const auto window = std::uint64_t{1} << attempt().be;
    const auto slots = static_cast<std::int64_t>(rng_.below(window));
    access_timer_ = engine_.schedule_in(cfg_.backoff_unit * slots, EventKind::TimerExpiry, id_,
                                        [this, next] { (this->*next)(); });
}

void FragNode::send_rts() {
    const Packet& p = job_packet();
    Frame rts;
    rts.kind = FrameKind::RTS;
    rts.sender = id_;
    rts.receiver = sink_;
    rts.airtime = cfg_.rts_airtime();
    rts.meta.priority = p.priority;
    rts.meta.packet_id = p.id;
    rts.meta.packet_units = p.payload_units;
    rts.meta.duration = cfg_.cts_airtime();
    phase_ = MacPhase::AwaitCts;
    medium_.transmit(std::move(rts));
}

void FragNode::on_tx_end(const Frame& frame) {
    if (frame.kind == FrameKind::RTS) {
        response_timer_ = engine_.schedule_in(cfg_.cts_wait, EventKind::TimerExpiry, id_,
                                              [this] { on_response_timeout(); });
        return;
    }
    if (frame.kind != FrameKind::DATA) return;

    if (frame.meta.priority == Priority::Urgent) {
        phase_ = MacPhase::AwaitAck;
        response_timer_ = engine_.schedule_in(cfg_.ack_wait, EventKind::TimerExpiry, id_,
                                              [this] { on_response_timeout(); });
        return;
    }
    ++fragments_sent_;
    NormalJob& job = *normal_;
    job.cursor += 1;
    if (job.cursor >= job.pending.size()) {
        phase_ = MacPhase::AwaitAck;
        response_timer_ = engine_.schedule_in(cfg_.ack_wait, EventKind::TimerExpiry, id_,
                                              [this] { on_response_timeout(); });
    } else if (!urgent_q_.empty()) {
        suspend_stream_for_own_urgent();
    } else {
        gap_timer_ = engine_.schedule_in(cfg_.gap, EventKind::TimerExpiry, id_, [this] { gap_end(); });
    }
}

void FragNode::on_frame(const Frame& frame, Verdict verdict) {
    if (verdict != Verdict::Delivered) return;
    const SimTime now = engine_.now();

    if (frame.receiver != id_) {
        if (frame.meta.duration.ticks > 0) nav_until_ = std::max(nav_until_, now + frame.meta.duration);
        if (frame.kind == FrameKind::CTS && frame.meta.priority == Priority::Urgent) {
            const bool streaming = phase_ == MacPhase::SendingFragments && active_ == Job::Normal;
            if (streaming || phase_ == MacPhase::PausedForUrgent) pause_for(frame);
        } else if (frame.kind == FrameKind::ACK && phase_ == MacPhase::PausedForUrgent &&
                   frame.meta.packet_id == paused_for_) {
            resume(false);
        }
        return;
    }

    if (active_ == Job::None || frame.meta.packet_id != job_packet().id) return;
    if (frame.kind == FrameKind::CTS && phase_ == MacPhase::AwaitCts) {
        engine_.cancel(response_timer_);
        on_grant(frame);
    } else if (frame.kind == FrameKind::ACK &&
               (phase_ == MacPhase::AwaitAck || phase_ == MacPhase::AwaitCts)) {
        // An ACK in reply to an RTS means the sink already holds the packet.
        engine_.cancel(response_timer_);
        on_ack(frame);
    }
}

void FragNode::on_grant(const Frame& cts) {
    if (active_ == Job::Urgent) {
        const Packet& p = urgent_->packet;
        Frame data;
        data.kind = FrameKind::DATA;
        data.sender = id_;
        data.receiver = sink_;
        data.payload_units = p.payload_units;
        data.airtime = cfg_.data_airtime(p.payload_units);
        data.meta.priority = Priority::Urgent;
        data.meta.packet_id = p.id;
        data.meta.packet_units = p.payload_units;
        data.meta.last_in_burst = true;
        data.meta.duration = cfg_.ack_airtime();
        phase_ = MacPhase::SendingFragments;
        medium_.transmit(std::move(data));
        return;
    }

    NormalJob& job = *normal_;
    if (job.plan.empty()) {
        const int size = cts.meta.fragment_size > 0 ? cts.meta.fragment_size : cfg_.fragment_size;
        for (const auto& f : fragment_packet(job.packet.id, job.packet.payload_units, size)) {
            job.plan.push_back(f.units);
        }
    }
    job.pending.clear();
    if (cts.meta.missing.empty()) {
        for (int i = 0; i < static_cast<int>(job.plan.size()); ++i) job.pending.push_back(i);
    } else {
        job.pending = cts.meta.missing;
    }
    job.cursor = 0;
    job.granted = true;
    if (!urgent_q_.empty()) {
        suspend_stream_for_own_urgent();
        return;
    }
    send_next_fragment();
}

SimTime FragNode::stream_duration_after(std::size_t next_cursor) const {
    const NormalJob& job = *normal_;
    SimTime total = cfg_.ack_airtime();
    for (std::size_t i = next_cursor; i < job.pending.size(); ++i) {
        total += cfg_.gap + cfg_.data_airtime(job.plan[static_cast<std::size_t>(job.pending[i])]);
    }
    return total;
}

void FragNode::send_next_fragment() {
    NormalJob& job = *normal_;
    const int index = job.pending[job.cursor];
    const int units = job.plan[static_cast<std::size_t>(index)];
    Frame data;
    data.kind = FrameKind::DATA;
    data.sender = id_;
    data.receiver = sink_;
    data.payload_units = units;
    data.airtime = cfg_.data_airtime(units);
    data.meta.priority = Priority::Normal;
    data.meta.packet_id = job.packet.id;
    data.meta.packet_units = job.packet.payload_units;
    data.meta.fragment_index = index;
    data.meta.fragment_count = static_cast<int>(job.plan.size());
    data.meta.last_in_burst = job.cursor + 1 == job.pending.size();
    data.meta.duration = stream_duration_after(job.cursor + 1);
    phase_ = MacPhase::SendingFragments;
    medium_.transmit(std::move(data));
}

void FragNode::gap_end() {
    if (!urgent_q_.empty()) {
        suspend_stream_for_own_urgent();
        return;
    }
    const SimTime now = engine_.now();
    if (medium_.busy_during(id_, 0, now - cfg_.cca, now)) {
        const SimTime idle = std::max(medium_.idle_at(id_, 0), now);
        gap_timer_ = engine_.schedule(idle + cfg_.cca, EventKind::TimerExpiry, id_, [this] { gap_end(); });
        return;
    }
    send_next_fragment();
}

void FragNode::suspend_stream_for_own_urgent() {
    engine_.cancel(gap_timer_);
    stream_suspended_ = true;
    begin_urgent();
}

void FragNode::pause_for(const Frame& cts) {
    const SimTime now = engine_.now();
    engine_.cancel(gap_timer_);
    engine_.cancel(guard_timer_);
    if (log_) {
        if (phase_ == MacPhase::PausedForUrgent) log_->pauses[pause_index_].end = now;
        log_->pauses.push_back(PauseRecord{id_, cts.meta.packet_id, now, now, false});
        pause_index_ = log_->pauses.size() - 1;
    }
    phase_ = MacPhase::PausedForUrgent;
    paused_for_ = cts.meta.packet_id;
    guard_timer_ = engine_.schedule(now + cts.meta.duration + cfg_.cts_wait, EventKind::TimerExpiry, id_,
                                    [this] { resume(true); });
}

void FragNode::resume(bool by_guard) {
    engine_.cancel(guard_timer_);
    if (log_) {
        log_->pauses[pause_index_].end = engine_.now();
        log_->pauses[pause_index_].by_guard = by_guard;
    }
    phase_ = MacPhase::SendingFragments;
    gap_timer_ = engine_.schedule_in(cfg_.gap, EventKind::TimerExpiry, id_, [this] { gap_end(); });
}

void FragNode::on_response_timeout() {
    Attempt& a = attempt();
    a.retries += 1;
    a.be = std::min(a.be + 1, cfg_.max_be);
    if (active_ == Job::Normal) normal_->granted = false;
    if (a.retries > cfg_.max_retries) {
        drop_job();
        return;
    }
    if (active_ == Job::Urgent) {
        random_backoff_then(&FragNode::urgent_access);
    } else if (!urgent_q_.empty()) {
        begin_urgent();
    } else {
        normal_access();
    }
}

void FragNode::on_ack(const Frame& ack) {
    if (active_ == Job::Urgent || ack.meta.missing.empty()) {
        finish_job();
        return;
    }
    NormalJob& job = *normal_;
    job.attempt.retries += 1;
    if (job.attempt.retries > cfg_.max_retries) {
        drop_job();
        return;
    }
    job.pending = ack.meta.missing;
    job.cursor = 0;
    phase_ = MacPhase::SendingFragments;
    gap_timer_ = engine_.schedule_in(cfg_.gap, EventKind::TimerExpiry, id_, [this] { gap_end(); });
}

void FragNode::finish_job() {
    if (active_ == Job::Urgent) {
        urgent_.reset();
    } else {
        normal_.reset();
        stream_suspended_ = false;
    }
    active_ = Job::None;
    phase_ = MacPhase::Idle;
    start_next();
}

void FragNode::drop_job() {
    metrics_.record_drop(job_packet(), engine_.now());
    finish_job();
}

// ---------------------------------------------------------------------------
// FragSink

FragSink::FragSink(NodeId id, Engine& engine, Medium& medium, const FrogConfig& config, Metrics& metrics,
                   FragmentPolicy& policy)
    : id_(id), engine_(engine), medium_(medium), cfg_(config), metrics_(metrics), policy_(policy) {
    medium_.attach(id_, this);
}

std::optional<NodeId> FragSink::stream_holder() const {
    if (!stream_) return std::nullopt;
    return stream_->node;
}

std::optional<NodeId> FragSink::urgent_holder() const {
    if (!urgent_) return std::nullopt;
    return urgent_->node;
}

const std::vector<int>& FragSink::arrivals(std::uint64_t packet_id) const {
    static const std::vector<int> kNone;
    auto it = assemblies_.find(packet_id);
    return it == assemblies_.end() ? kNone : it->second.arrivals;
}

void FragSink::on_frame(const Frame& frame, Verdict verdict) {
    if (verdict != Verdict::Delivered || frame.receiver != id_) return;
    if (frame.kind == FrameKind::RTS) {
        handle_rts(frame);
    } else if (frame.kind == FrameKind::DATA) {
        handle_data(frame);
    }
}

void FragSink::send(FrameKind kind, NodeId to, FrameMeta meta) {
    if (medium_.transmitting(id_)) return;
    Frame f;
    f.kind = kind;
    f.sender = id_;
    f.receiver = to;
    f.airtime = cfg_.airtime.control();
    f.meta = std::move(meta);
    medium_.transmit(std::move(f));
}

std::vector<int> FragSink::missing_of(std::uint64_t packet_id) const {
    std::vector<int> missing;
    auto it = assemblies_.find(packet_id);
    if (it == assemblies_.end()) return missing;
    for (int i = 0; i < it->second.count; ++i) {
        if (!it->second.have[static_cast<std::size_t>(i)]) missing.push_back(i);
    }
    return missing;
}

void FragSink::hold_stream(NodeId node, std::uint64_t packet) {
    if (stream_) engine_.cancel(stream_->timer);
    stream_ = Holder{node, packet, engine_.schedule_in(cfg_.stream_timeout, EventKind::TimerExpiry, id_,
                                                       [this] { stream_.reset(); })};
}

void FragSink::release_stream() {
    if (!stream_) return;
    engine_.cancel(stream_->timer);
    stream_.reset();
}

void FragSink::release_urgent() {
    if (!urgent_) return;
    engine_.cancel(urgent_->timer);
    urgent_.reset();
}

void FragSink::handle_rts(const Frame& rts) {
    const std::uint64_t pid = rts.meta.packet_id;
    FrameMeta meta;
    meta.priority = rts.meta.priority;
    meta.packet_id = pid;
    meta.packet_units = rts.meta.packet_units;

    if (completed_.count(pid)) {
        send(FrameKind::ACK, rts.sender, std::move(meta));
        return;
    }

    if (rts.meta.priority == Priority::Urgent) {
        policy_.observe_urgent(pid);
        if (urgent_ && urgent_->node != rts.sender) return;
        const SimTime exchange = cfg_.data_airtime(rts.meta.packet_units) + cfg_.ack_airtime();
        if (urgent_) engine_.cancel(urgent_->timer);
        urgent_ = Holder{rts.sender, pid,
                         engine_.schedule_in(cfg_.cts_airtime() + exchange + cfg_.cts_wait, EventKind::TimerExpiry,
                                             id_, [this] { urgent_.reset(); })};
        if (stream_) hold_stream(stream_->node, stream_->packet);
        meta.duration = exchange;
        send(FrameKind::CTS, rts.sender, std::move(meta));
        return;
    }

    if (urgent_) return;
    if (stream_ && stream_->node != rts.sender) return;
    hold_stream(rts.sender, pid);

    const int size = policy_.fragment_size();
    meta.fragment_size = size;
    meta.missing = missing_of(pid);
    const int count = meta.missing.empty() ? fragment_count(rts.meta.packet_units, size)
                                           : static_cast<int>(meta.missing.size());
    const int per_fragment = meta.missing.empty() ? std::min(size, rts.meta.packet_units)
                                                   : fragment_count(rts.meta.packet_units, assemblies_[pid].count);
    meta.duration = cfg_.data_airtime(per_fragment) * count + cfg_.gap * (count - 1) + cfg_.ack_airtime();
    send(FrameKind::CTS, rts.sender, std::move(meta));
}

void FragSink::handle_data(const Frame& data) {
    const std::uint64_t pid = data.meta.packet_id;
    const SimTime now = engine_.now();
    Assembly& a = assemblies_[pid];
    if (a.count == 0) {
        a.count = std::max(1, data.meta.fragment_count);
        a.have.assign(static_cast<std::size_t>(a.count), 0);
    }
    const int index = data.meta.fragment_index;
    if (index >= 0 && index < a.count && !a.have[static_cast<std::size_t>(index)]) {
        a.have[static_cast<std::size_t>(index)] = 1;
        a.arrivals.push_back(index);
    }
    const bool complete = std::all_of(a.have.begin(), a.have.end(), [](char c) { return c != 0; });
    if (complete && completed_.insert(pid).second) {
        metrics_.record_delivery(metrics_.packet(pid), now);
        if (data.meta.priority == Priority::Urgent) policy_.observe_urgent(pid);
    }

    const bool from_stream = stream_ && stream_->node == data.sender;
    if (data.meta.priority == Priority::Normal && from_stream) hold_stream(stream_->node, stream_->packet);
    if (!data.meta.last_in_burst) return;

    FrameMeta ack;
    ack.priority = data.meta.priority;
    ack.packet_id = pid;
    ack.missing = missing_of(pid);
    send(FrameKind::ACK, data.sender, std::move(ack));

    if (data.meta.priority == Priority::Urgent) {
        if (urgent_ && urgent_->node == data.sender) release_urgent();
        if (stream_) hold_stream(stream_->node, stream_->packet);
    } else if (complete && from_stream) {
        release_stream();
    }
}

}  // namespace dyfrag
