#include "dyfrag/traffic/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "dyfrag/core/errors.hpp"

namespace dyfrag {

void TrafficProfile::validate() const {
    if (!(normal_rate >= 0.0) || !(urgent_rate >= 0.0)) throw ConfigError("traffic rates must be >= 0");
    if (normal_payload < 1 || urgent_payload < 1) throw ConfigError("payloads must be >= 1 unit");
}

std::uint64_t make_packet_id(NodeId node, Priority cls, std::uint32_t seq) {
    return (static_cast<std::uint64_t>(node) << 40) | (static_cast<std::uint64_t>(cls) << 32) | seq;
}

std::vector<Packet> generate_arrivals(const TrafficProfile& profile, Priority cls, SimTime horizon,
                                      RngStream& stream) {
    std::vector<Packet> out;
    const double rate = profile.rate(cls);
    if (rate <= 0.0 || horizon.ticks <= 0) return out;
    const double end = horizon.seconds();
    std::uint32_t seq = 0;

    auto emit = [&](double t) {
        const SimTime at = SimTime::from_seconds(t);
        if (at >= horizon) return false;
        out.push_back(Packet{make_packet_id(profile.node, cls, seq++), profile.node, cls,
                             profile.payload(cls), at});
        return true;
    };

    if (profile.process == ArrivalProcess::Periodic) {
        const double period = 1.0 / rate;
        const double phase = stream.uniform() * period;
        for (std::uint64_t k = 0;; ++k) {
            if (!emit(phase + static_cast<double>(k) * period)) break;
        }
    } else {
        double t = stream.exponential(rate);
        while (t < end && emit(t)) t += stream.exponential(rate);
    }
    return out;
}

std::vector<Packet> generate_arrivals(const TrafficProfile& profile, SimTime horizon,
                                      std::uint64_t master_seed) {
    RngStream normal_stream(master_seed, profile.node, StreamPurpose::TrafficNormal);
    RngStream urgent_stream(master_seed, profile.node, StreamPurpose::TrafficUrgent);
    auto all = generate_arrivals(profile, Priority::Normal, horizon, normal_stream);
    auto urgent = generate_arrivals(profile, Priority::Urgent, horizon, urgent_stream);
    all.insert(all.end(), urgent.begin(), urgent.end());
    std::stable_sort(all.begin(), all.end(), [](const Packet& a, const Packet& b) {
        return a.t_gen != b.t_gen ? a.t_gen < b.t_gen : a.id < b.id;
    });
    return all;
}

}  // namespace dyfrag
