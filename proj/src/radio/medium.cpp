#include "dyfrag/radio/medium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dyfrag {

namespace {
// Transmissions older than this cannot overlap anything still on the air.
constexpr SimTime kKeepWindow = SimTime::ms(100);
// Absorbs rounding in computed layouts so a pair placed exactly R apart stays in range.
constexpr double kRangeSlack = 1e-9;
}  // namespace

const char* to_string(FrameKind kind) {
    switch (kind) {
        case FrameKind::RTS: return "RTS";
        case FrameKind::CTS: return "CTS";
        case FrameKind::DATA: return "DATA";
        case FrameKind::ACK: return "ACK";
    }
    return "?";
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Delivered: return "DELIVERED";
        case Verdict::LostCollision: return "LOST_COLLISION";
        case Verdict::LostChannel: return "LOST_CHANNEL";
    }
    return "?";
}

double reception_probability(double d, double range, double p_edge) {
    if (d > range * (1.0 + kRangeSlack)) return 0.0;
    const double ratio = std::min(d / range, 1.0);
    return 1.0 - (1.0 - p_edge) * ratio * ratio;
}

std::vector<NodePlacement> circular_layout(int sources, double radius) {
    std::vector<NodePlacement> nodes;
    nodes.push_back({0, {0.0, 0.0}});
    for (int i = 1; i <= sources; ++i) {
        const double angle = 2.0 * std::numbers::pi * (i - 1) / sources;
        nodes.push_back({i, {radius * std::cos(angle), radius * std::sin(angle)}});
    }
    return nodes;
}

Medium::Medium(Engine& engine, MediumConfig config, std::vector<NodePlacement> nodes,
               std::uint64_t master_seed)
    : engine_(engine), config_(config) {
    if (config_.range_m <= 0.0) throw ConfigError("radio range must be positive");
    if (config_.p_edge < 0.0 || config_.p_edge > 1.0) throw ConfigError("p_edge must lie in [0, 1]");
    if (config_.num_channels < 1) throw ConfigError("at least one channel is required");

    std::sort(nodes.begin(), nodes.end(),
              [](const NodePlacement& a, const NodePlacement& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id != static_cast<NodeId>(i)) {
            throw ConfigError("node ids must be dense and start at 0 (got " +
                              std::to_string(nodes[i].id) + ")");
        }
        positions_.push_back(nodes[i].pos);
    }

    const std::size_t n = positions_.size();
    reach_.assign(n * n, 0);
    success_.assign(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            const double d = std::hypot(positions_[a].x - positions_[b].x,
                                        positions_[a].y - positions_[b].y);
            reach_[a * n + b] = d <= config_.range_m * (1.0 + kRangeSlack) ? 1 : 0;
            success_[a * n + b] = reception_probability(d, config_.range_m, config_.p_edge);
        }
    }
    listeners_.assign(n, nullptr);
    tx_busy_until_.assign(n * static_cast<std::size_t>(config_.num_channels), SimTime{});
    for (std::size_t i = 0; i < n; ++i) {
        loss_rng_.emplace_back(master_seed, static_cast<NodeId>(i), StreamPurpose::Channel);
    }
    recent_.resize(static_cast<std::size_t>(config_.num_channels));
}

void Medium::check_node(NodeId node) const {
    if (node < 0 || node >= node_count()) {
        throw ConfigError("unknown node id " + std::to_string(node));
    }
}

void Medium::attach(NodeId node, RadioListener* listener) {
    check_node(node);
    listeners_[static_cast<std::size_t>(node)] = listener;
}

double Medium::distance(NodeId a, NodeId b) const {
    check_node(a);
    check_node(b);
    const auto& pa = positions_[static_cast<std::size_t>(a)];
    const auto& pb = positions_[static_cast<std::size_t>(b)];
    return std::hypot(pa.x - pb.x, pa.y - pb.y);
}

bool Medium::in_range(NodeId a, NodeId b) const {
    check_node(a);
    check_node(b);
    return reach_[index(a, b)] != 0;
}

const OngoingTx& Medium::transmit(Frame frame) {
    check_node(frame.sender);
    if (frame.channel < 0 || frame.channel >= config_.num_channels) {
        throw ContractViolation("transmit: channel " + std::to_string(frame.channel) + " out of range");
    }
    if (frame.airtime.ticks <= 0) throw ContractViolation("transmit: airtime must be positive");
    const SimTime now = engine_.now();
    if (transmitting(frame.sender, frame.channel)) {
        throw ContractViolation("transmit: node " + std::to_string(frame.sender) +
                                " is already transmitting on channel " + std::to_string(frame.channel));
    }

    const int channel = frame.channel;
    prune(channel);
    OngoingTx tx{next_tx_id_++, std::move(frame), now, now + frame.airtime};
    tx.end = now + tx.frame.airtime;
    tx_busy_until_[busy_index(tx.frame.sender, channel)] = tx.end;
    if (log_enabled_) log_.push_back(tx);
    auto& lane = recent_[static_cast<std::size_t>(channel)];
    lane.push_back(std::move(tx));
    const OngoingTx& placed = lane.back();

    const std::uint64_t id = placed.id;
    engine_.schedule(placed.end, EventKind::FrameRxEnd, placed.frame.sender,
                     [this, id, channel] { finish(id, channel); });
    return placed;
}

void Medium::prune(int channel) {
    auto& lane = recent_[static_cast<std::size_t>(channel)];
    const SimTime horizon = engine_.now() - kKeepWindow;
    while (!lane.empty() && lane.front().end < horizon) lane.pop_front();
}

Verdict Medium::judge(const OngoingTx& tx, NodeId receiver) {
    const auto& lane = recent_[static_cast<std::size_t>(tx.frame.channel)];
    bool collided = false;
    for (const auto& other : lane) {
        if (other.id == tx.id) continue;
        if (other.start < tx.end && other.end > tx.start && audible(receiver, other.frame.sender)) {
            collided = true;
            break;
        }
    }
    // One draw per receiver per frame keeps the loss streams aligned.
    const double u = loss_rng_[static_cast<std::size_t>(receiver)].uniform();
    if (collided) return Verdict::LostCollision;
    return u < success_[index(tx.frame.sender, receiver)] ? Verdict::Delivered : Verdict::LostChannel;
}

void Medium::finish(std::uint64_t tx_id, int channel) {
    const auto& lane = recent_[static_cast<std::size_t>(channel)];
    auto it = std::find_if(lane.rbegin(), lane.rend(),
                           [tx_id](const OngoingTx& t) { return t.id == tx_id; });
    if (it == lane.rend()) throw ContractViolation("medium: finished transmission not found");
    const OngoingTx tx = *it;

    const NodeId sender = tx.frame.sender;
    std::vector<std::pair<NodeId, Verdict>> verdicts;
    for (NodeId r = 0; r < node_count(); ++r) {
        if (r == sender || !reach_[index(sender, r)]) continue;
        verdicts.emplace_back(r, judge(tx, r));
    }
    if (auto* l = listeners_[static_cast<std::size_t>(sender)]) l->on_tx_end(tx.frame);
    for (const auto& [r, v] : verdicts) {
        if (auto* l = listeners_[static_cast<std::size_t>(r)]) l->on_frame(tx.frame, v);
    }
}

bool Medium::carrier_sense(NodeId node, int channel) const {
    check_node(node);
    const SimTime now = engine_.now();
    for (const auto& tx : recent_[static_cast<std::size_t>(channel)]) {
        if (tx.start <= now && now < tx.end && audible(node, tx.frame.sender)) return true;
    }
    return false;
}

bool Medium::busy_during(NodeId node, int channel, SimTime t0, SimTime t1) const {
    check_node(node);
    for (const auto& tx : recent_[static_cast<std::size_t>(channel)]) {
        if (tx.start <= t1 && tx.end > t0 && audible(node, tx.frame.sender)) return true;
    }
    return false;
}

SimTime Medium::idle_at(NodeId node, int channel) const {
    check_node(node);
    const SimTime now = engine_.now();
    SimTime idle = now;
    for (const auto& tx : recent_[static_cast<std::size_t>(channel)]) {
        if (tx.start <= now && tx.end > now && audible(node, tx.frame.sender)) {
            idle = std::max(idle, tx.end);
        }
    }
    return idle;
}

bool Medium::transmitting(NodeId node) const {
    for (int c = 0; c < config_.num_channels; ++c) {
        if (transmitting(node, c)) return true;
    }
    return false;
}

bool Medium::transmitting(NodeId node, int channel) const {
    return tx_busy_until_[busy_index(node, channel)] > engine_.now();
}

}  // namespace dyfrag
