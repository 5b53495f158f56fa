#include "dyfrag/traffic/metrics.hpp"

#include <numeric>
#include <string>

#include "dyfrag/core/errors.hpp"

namespace dyfrag {

void Metrics::record_generated(const Packet& packet) {
    auto [it, inserted] = status_.try_emplace(packet.id, Entry{packet, State::Pending});
    if (!inserted) throw ContractViolation("packet " + std::to_string(packet.id) + " generated twice");
    classes_[index(packet.priority)].generated += 1;
}

void Metrics::record_delivery(const Packet& packet, SimTime t_rx) {
    auto it = status_.find(packet.id);
    if (it == status_.end()) {
        throw ContractViolation("delivery of unknown packet " + std::to_string(packet.id));
    }
    if (it->second.state == State::Delivered) {
        throw ContractViolation("duplicate completion of packet " + std::to_string(packet.id));
    }
    const SimTime delay = t_rx - packet.t_gen;
    if (delay.ticks <= 0) {
        throw ContractViolation("non-positive delay for packet " + std::to_string(packet.id));
    }
    auto& cls = classes_[index(packet.priority)];
    if (it->second.state == State::Dropped) cls.dropped -= 1;
    it->second.state = State::Delivered;
    cls.delay_samples.push_back(delay);
    cls.delivered += 1;
    cls.delivered_units += packet.payload_units;
}

bool Metrics::record_drop(const Packet& packet, SimTime /*t_drop*/) {
    auto it = status_.find(packet.id);
    if (it == status_.end()) throw ContractViolation("drop of unknown packet " + std::to_string(packet.id));
    if (it->second.state != State::Pending) return false;
    it->second.state = State::Dropped;
    classes_[index(packet.priority)].dropped += 1;
    return true;
}

std::optional<double> Metrics::avg_delay(Priority cls) const {
    const auto& samples = of(cls).delay_samples;
    if (samples.empty()) return std::nullopt;
    const std::int64_t total = std::accumulate(samples.begin(), samples.end(), std::int64_t{0},
                                               [](std::int64_t acc, SimTime t) { return acc + t.ticks; });
    return static_cast<double>(total) * 1e-6 / static_cast<double>(samples.size());
}

double Metrics::throughput(Priority cls, SimTime horizon) const {
    if (horizon.ticks <= 0) throw ContractViolation("throughput: horizon must be positive");
    return static_cast<double>(of(cls).delivered_units) / horizon.seconds();
}

const Packet& Metrics::packet(std::uint64_t id) const {
    auto it = status_.find(id);
    if (it == status_.end()) throw ContractViolation("unknown packet " + std::to_string(id));
    return it->second.packet;
}

bool Metrics::delivered(std::uint64_t id) const {
    auto it = status_.find(id);
    return it != status_.end() && it->second.state == State::Delivered;
}

}  // namespace dyfrag
