#include "dyfrag/mac/idsme.hpp"

#include <algorithm>
#include <string>

namespace dyfrag {

int IdsmeConfig::cells_needed(int payload_units) const {
    const SimTime busy = airtime.airtime(payload_units) + airtime.control();
    return static_cast<int>((busy.ticks + slot.ticks - 1) / slot.ticks);
}

void IdsmeConfig::validate() const {
    if (slot.ticks <= 0) throw ConfigError("slot duration must be positive");
    if (total_slots < 2) throw ConfigError("a superframe needs at least 2 slots");
    if (cap_min < 1 || cap_max > total_slots - 1 || cap_min > cap_max) {
        throw ConfigError("need 1 <= cap_min <= cap_max <= total_slots - 1");
    }
    if (cap_init < cap_min || cap_init > cap_max) throw ConfigError("cap_init outside [cap_min, cap_max]");
    if (channels < 1) throw ConfigError("at least one channel is required");
    if (cw_urgent < 1 || cw_normal <= cw_urgent) throw ConfigError("need 1 <= cw_urgent < cw_normal");
    if (backoff_unit.ticks <= 0 || cca.ticks <= 0 || ack_wait.ticks <= 0) {
        throw ConfigError("backoff unit, CCA and ACK wait must be positive");
    }
    if (max_cap_retries < 0 || max_retries < 0) throw ConfigError("retry limits must be >= 0");
    if (collision_threshold < 1) throw ConfigError("collision_threshold must be >= 1");
    if (slot * cap_min < cca + airtime.control() * 2) {
        throw ConfigError("the smallest CAP must fit CCA + request + ACK");
    }
}

Superframe build_superframe(int cap_slots, int cfp_slots, SimTime slot, int num_channels) {
    if (cap_slots < 1 || cfp_slots < 1 || num_channels < 1) {
        throw ConfigError("superframe needs cap >= 1, cfp >= 1 and channels >= 1 (got cap=" +
                          std::to_string(cap_slots) + ", cfp=" + std::to_string(cfp_slots) +
                          ", channels=" + std::to_string(num_channels) + ")");
    }
    if (slot.ticks <= 0) throw ConfigError("slot duration must be positive");
    Superframe sf;
    sf.cap_slots = cap_slots;
    sf.cfp_slots = cfp_slots;
    sf.slot = slot;
    sf.num_channels = num_channels;
    return sf;
}

std::vector<GtsRequest> allocate_gts(const std::vector<GtsRequest>& requests, Superframe& sf,
                                     const IdsmeConfig& config) {
    std::vector<char> placed(requests.size(), 0);

    auto node_free = [&sf](NodeId node, int first, int cells) {
        return std::none_of(sf.grants.begin(), sf.grants.end(), [&](const GtsGrant& g) {
            return g.node == node && g.slot < first + cells && first < g.slot + g.cells;
        });
    };
    auto try_place = [&](const GtsRequest& r, std::pair<int, int> after) -> std::optional<std::pair<int, int>> {
        const int cells = config.cells_needed(r.units);
        for (int s = 0; s + cells <= sf.cfp_slots; ++s) {
            for (int c = 0; c < sf.num_channels; ++c) {
                if (std::pair{s, c} <= after) continue;
                bool free = true;
                for (int k = 0; k < cells && free; ++k) free = sf.table.count({s + k, c}) == 0;
                if (!free || !node_free(r.node, s, cells)) continue;
                for (int k = 0; k < cells; ++k) sf.table[{s + k, c}] = GtsCell{r.node, r.priority, r.packet_id};
                sf.grants.push_back(GtsGrant{r.node, r.priority, r.packet_id, s, c, cells});
                return std::pair{s, c};
            }
        }
        return std::nullopt;
    };

    std::pair<int, int> last_urgent{-1, -1};
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (requests[i].priority != Priority::Urgent) continue;
        if (auto at = try_place(requests[i], {-1, -1})) {
            placed[i] = 1;
            last_urgent = std::max(last_urgent, *at);
        }
    }
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (requests[i].priority != Priority::Normal) continue;
        if (try_place(requests[i], last_urgent)) placed[i] = 1;
    }

    std::vector<GtsRequest> unplaced;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (!placed[i]) unplaced.push_back(requests[i]);
    }
    return unplaced;
}

int adapt_cap(int cap, bool urgent_deferred, int cap_collisions, const IdsmeConfig& config) {
    if (urgent_deferred) {
        cap -= 1;
    } else if (cap_collisions >= config.collision_threshold) {
        cap += 1;
    }
    return std::clamp(cap, config.cap_min, config.cap_max);
}

std::optional<std::size_t> cap_winner(const std::vector<int>& backoffs) {
    if (backoffs.empty()) return std::nullopt;
    const auto best = std::min_element(backoffs.begin(), backoffs.end());
    if (std::count(backoffs.begin(), backoffs.end(), *best) > 1) return std::nullopt;
    return static_cast<std::size_t>(best - backoffs.begin());
}

// ---------------------------------------------------------------------------
// IdsmeSink

IdsmeSink::IdsmeSink(NodeId id, Engine& engine, Medium& medium, const IdsmeConfig& config, Metrics& metrics)
    : id_(id), engine_(engine), medium_(medium), cfg_(config), metrics_(metrics) {
    cfg_.validate();
    if (medium_.config().num_channels < cfg_.channels) {
        throw ConfigError("medium has fewer channels than the superframe uses");
    }
    medium_.attach(id_, this);
    engine_.schedule(engine_.now(), EventKind::SuperframeBoundary, id_, [this] { boundary(); });
}

void IdsmeSink::register_node(IdsmeNode* node) { nodes_.push_back(node); }

void IdsmeSink::boundary() {
    const SimTime now = engine_.now();
    const int cap = cap_history_.empty() ? cfg_.cap_init
                                         : adapt_cap(sf_.cap_slots, urgent_deferred_, cap_collisions_, cfg_);
    urgent_deferred_ = false;
    cap_collisions_ = 0;

    sf_ = build_superframe(cap, cfg_.total_slots - cap, cfg_.slot, cfg_.channels);
    sf_.start = now;
    pending_ = allocate_gts(pending_, sf_, cfg_);
    for (const auto& r : pending_) {
        if (r.priority == Priority::Urgent) urgent_deferred_ = true;
    }
    for (const auto& g : sf_.grants) known_.erase(g.packet_id);
    cap_history_.push_back(cap);

    for (IdsmeNode* node : nodes_) {
        std::vector<GtsGrant> mine;
        for (const auto& g : sf_.grants) {
            if (g.node == node->id()) mine.push_back(g);
        }
        node->on_superframe(sf_, mine);
    }
    engine_.schedule(now + cfg_.superframe_length(), EventKind::SuperframeBoundary, id_, [this] { boundary(); });
}

void IdsmeSink::send(FrameKind kind, NodeId to, int channel, FrameMeta meta) {
    if (medium_.transmitting(id_, channel)) return;
    Frame f;
    f.kind = kind;
    f.sender = id_;
    f.receiver = to;
    f.channel = channel;
    f.airtime = cfg_.airtime.control();
    f.meta = std::move(meta);
    medium_.transmit(std::move(f));
}

void IdsmeSink::on_frame(const Frame& frame, Verdict verdict) {
    if (frame.receiver != id_) return;
    const SimTime now = engine_.now();

    if (frame.kind == FrameKind::RTS) {
        if (verdict == Verdict::LostCollision) {
            // Frames that overlap one another form a single collision event.
            if (now - frame.airtime >= last_collision_end_) cap_collisions_ += 1;
            last_collision_end_ = std::max(last_collision_end_, now);
            return;
        }
        if (verdict != Verdict::Delivered) return;
        FrameMeta ack;
        ack.priority = frame.meta.priority;
        ack.packet_id = frame.meta.packet_id;
        for (std::size_t i = 0; i < frame.meta.request_ids.size(); ++i) {
            const std::uint64_t pid = frame.meta.request_ids[i];
            if (completed_.count(pid)) {
                ack.request_ids.push_back(pid);
            } else if (known_.insert(pid).second) {
                pending_.push_back(GtsRequest{frame.sender, frame.meta.request_classes[i],
                                              frame.meta.request_units[i], pid});
            }
        }
        send(FrameKind::ACK, frame.sender, frame.channel, std::move(ack));
        return;
    }

    if (frame.kind == FrameKind::DATA && verdict == Verdict::Delivered) {
        const std::uint64_t pid = frame.meta.packet_id;
        if (completed_.insert(pid).second) metrics_.record_delivery(metrics_.packet(pid), now);
        FrameMeta ack;
        ack.priority = frame.meta.priority;
        ack.packet_id = pid;
        send(FrameKind::ACK, frame.sender, frame.channel, std::move(ack));
    }
}

// ---------------------------------------------------------------------------
// IdsmeNode

IdsmeNode::IdsmeNode(NodeId id, IdsmeSink& sink, Engine& engine, Medium& medium, const IdsmeConfig& config,
                     Metrics& metrics, std::uint64_t master_seed)
    : id_(id),
      sink_(sink),
      sink_id_(sink.id()),
      engine_(engine),
      medium_(medium),
      cfg_(config),
      metrics_(metrics),
      rng_(master_seed, id, StreamPurpose::Mac) {
    medium_.attach(id_, this);
    sink_.register_node(this);
}

std::vector<Packet> IdsmeNode::held_packets() const {
    std::vector<Packet> out(unrequested_.begin(), unrequested_.end());
    for (const auto& [pid, p] : requested_) out.push_back(p);
    return out;
}

bool IdsmeNode::has_unrequested_urgent() const {
    return std::any_of(unrequested_.begin(), unrequested_.end(),
                       [](const Packet& p) { return p.priority == Priority::Urgent; });
}

void IdsmeNode::enqueue(const Packet& packet) {
    unrequested_.push_back(packet);
    start_contention();
}

void IdsmeNode::on_superframe(const Superframe& sf, const std::vector<GtsGrant>& grants) {
    cap_start_ = sf.start;
    cap_end_ = sf.cap_end();
    deferred_ = false;
    if (contending_) {
        engine_.cancel(cap_timer_);
        contending_ = false;
        in_request_.clear();
    }
    for (const auto& g : grants) {
        const std::uint64_t pid = g.packet_id;
        const int channel = g.channel;
        engine_.schedule(sf.cfp_slot_start(g.slot), EventKind::TimerExpiry, id_,
                         [this, pid, channel] { send_data(pid, channel); });
    }
    start_contention();
}

void IdsmeNode::start_contention() {
    const SimTime now = engine_.now();
    if (contending_ || deferred_ || unrequested_.empty()) return;
    if (now < cap_start_ || now >= cap_end_) return;

    const bool urgent = has_unrequested_urgent();
    const std::int64_t unit = cfg_.backoff_unit.ticks;
    const std::int64_t next_period = ((now - cap_start_).ticks + unit - 1) / unit;
    const auto cw = static_cast<std::uint64_t>(urgent ? cfg_.cw_urgent : cfg_.cw_normal);
    const auto draw = static_cast<std::int64_t>(rng_.below(cw));
    const SimTime cca_start = cap_start_ + cfg_.backoff_unit * (next_period + draw);
    if (cca_start + cfg_.cca + cfg_.airtime.control() * 2 > cap_end_) {
        deferred_ = true;
        cap_retries_ = 0;
        if (urgent) sink_.report_urgent_deferral();
        return;
    }
    contending_ = true;
    cap_timer_ = engine_.schedule(cca_start + cfg_.cca, EventKind::TimerExpiry, id_,
                                  [this, cca_start] { contend_at(cca_start); });
}

void IdsmeNode::contend_at(SimTime cca_start) {
    if (medium_.busy_during(id_, 0, cca_start, engine_.now()) || medium_.transmitting(id_, 0)) {
        cap_failure();
        return;
    }
    Frame req;
    req.kind = FrameKind::RTS;
    req.sender = id_;
    req.receiver = sink_id_;
    req.channel = 0;
    req.airtime = cfg_.airtime.control();
    req.meta.priority = has_unrequested_urgent() ? Priority::Urgent : Priority::Normal;
    req.meta.packet_id = unrequested_.front().id;
    in_request_.clear();
    for (const Packet& p : unrequested_) {
        in_request_.push_back(p.id);
        req.meta.request_ids.push_back(p.id);
        req.meta.request_units.push_back(p.payload_units);
        req.meta.request_classes.push_back(p.priority);
    }
    medium_.transmit(std::move(req));
}

void IdsmeNode::cap_failure() {
    contending_ = false;
    in_request_.clear();
    cap_retries_ += 1;
    if (cap_retries_ > cfg_.max_cap_retries) {
        cap_retries_ = 0;
        deferred_ = true;
        if (has_unrequested_urgent()) sink_.report_urgent_deferral();
        return;
    }
    start_contention();
}

void IdsmeNode::on_tx_end(const Frame& frame) {
    if (frame.kind == FrameKind::RTS) {
        cap_timer_ = engine_.schedule_in(cfg_.ack_wait, EventKind::TimerExpiry, id_, [this] { cap_failure(); });
    } else if (frame.kind == FrameKind::DATA) {
        const std::uint64_t pid = frame.meta.packet_id;
        ack_timers_[pid] = engine_.schedule_in(cfg_.ack_wait, EventKind::TimerExpiry, id_,
                                               [this, pid] { data_failure(pid); });
    }
}

void IdsmeNode::on_frame(const Frame& frame, Verdict verdict) {
    if (verdict != Verdict::Delivered || frame.receiver != id_ || frame.kind != FrameKind::ACK) return;
    const std::uint64_t pid = frame.meta.packet_id;

    if (auto it = ack_timers_.find(pid); it != ack_timers_.end()) {
        engine_.cancel(it->second);
        ack_timers_.erase(it);
        requested_.erase(pid);
        retries_.erase(pid);
        return;
    }

    if (!contending_ || in_request_.empty() || pid != in_request_.front()) return;
    engine_.cancel(cap_timer_);
    const std::set<std::uint64_t> held_by_sink(frame.meta.request_ids.begin(), frame.meta.request_ids.end());
    const std::set<std::uint64_t> sent(in_request_.begin(), in_request_.end());
    std::deque<Packet> rest;
    for (const Packet& p : unrequested_) {
        if (!sent.count(p.id)) {
            rest.push_back(p);
        } else if (!held_by_sink.count(p.id)) {
            requested_.emplace(p.id, p);
        } else {
            retries_.erase(p.id);
        }
    }
    unrequested_ = std::move(rest);
    in_request_.clear();
    contending_ = false;
    cap_retries_ = 0;
    start_contention();
}

void IdsmeNode::send_data(std::uint64_t packet_id, int channel) {
    auto it = requested_.find(packet_id);
    if (it == requested_.end()) return;
    const Packet& p = it->second;
    Frame data;
    data.kind = FrameKind::DATA;
    data.sender = id_;
    data.receiver = sink_id_;
    data.channel = channel;
    data.payload_units = p.payload_units;
    data.airtime = cfg_.airtime.airtime(p.payload_units);
    data.meta.priority = p.priority;
    data.meta.packet_id = p.id;
    data.meta.packet_units = p.payload_units;
    data.meta.last_in_burst = true;
    data.meta.duration = cfg_.airtime.control();
    medium_.transmit(std::move(data));
}

void IdsmeNode::data_failure(std::uint64_t packet_id) {
    ack_timers_.erase(packet_id);
    auto it = requested_.find(packet_id);
    if (it == requested_.end()) return;
    const Packet p = it->second;
    requested_.erase(it);
    int& tries = retries_[packet_id];
    tries += 1;
    if (tries > cfg_.max_retries) {
        retries_.erase(packet_id);
        metrics_.record_drop(p, engine_.now());
        return;
    }
    unrequested_.push_front(p);
    start_contention();
}

}  // namespace dyfrag
