#include "dyfrag/exp/network.hpp"

#include <algorithm>
#include <memory>

namespace dyfrag {

std::vector<Packet> scenario_arrivals(const Scenario& sc) {
    std::vector<Packet> all;
    for (NodeId node = 1; node <= sc.sources; ++node) {
        TrafficProfile profile = sc.traffic;
        profile.node = node;
        auto mine = generate_arrivals(profile, sc.horizon, sc.seed);
        all.insert(all.end(), mine.begin(), mine.end());
    }
    std::stable_sort(all.begin(), all.end(), [](const Packet& a, const Packet& b) {
        return a.t_gen != b.t_gen ? a.t_gen < b.t_gen : a.id < b.id;
    });
    return all;
}

RunResult run_scenario(const Scenario& sc, const RunOptions& options) {
    sc.validate();
    RunResult result;
    Engine engine(options.record_events);

    MediumConfig mcfg = sc.medium;
    mcfg.num_channels = sc.protocol == Protocol::Idsme ? sc.idsme.channels : 1;
    Medium medium(engine, mcfg, sc.layout(), sc.seed);
    medium.enable_log(options.log_frames);

    const NodeId sink_id = 0;
    const FrogConfig frog = sc.frog_config();
    const IdsmeConfig idsme = sc.idsme_config();

    std::unique_ptr<FragmentPolicy> policy;
    std::unique_ptr<FragSink> frag_sink;
    std::unique_ptr<IdsmeSink> idsme_sink;
    std::vector<std::unique_ptr<FragNode>> frag_nodes;
    std::vector<std::unique_ptr<IdsmeNode>> idsme_nodes;

    switch (sc.protocol) {
        case Protocol::Frog:
        case Protocol::DyFrag:
            if (sc.protocol == Protocol::Frog) {
                policy = std::make_unique<FixedFragmentPolicy>(frog.fragment_size);
            } else {
                policy = std::make_unique<DyFragPolicy>(engine, sink_id, sc.dyfrag, &result.mac_log);
            }
            frag_sink = std::make_unique<FragSink>(sink_id, engine, medium, frog, result.metrics, *policy);
            for (NodeId n = 1; n <= sc.sources; ++n) {
                frag_nodes.push_back(std::make_unique<FragNode>(n, sink_id, engine, medium, frog, result.metrics,
                                                                &result.mac_log, sc.seed));
            }
            break;
        case Protocol::Idsme:
            idsme_sink = std::make_unique<IdsmeSink>(sink_id, engine, medium, idsme, result.metrics);
            for (NodeId n = 1; n <= sc.sources; ++n) {
                idsme_nodes.push_back(
                    std::make_unique<IdsmeNode>(n, *idsme_sink, engine, medium, idsme, result.metrics, sc.seed));
            }
            break;
    }

    result.arrivals = options.scripted ? *options.scripted : scenario_arrivals(sc);
    for (const Packet& p : result.arrivals) {
        if (p.source < 1 || p.source > sc.sources) {
            throw ConfigError("arrival for unknown source " + std::to_string(p.source));
        }
        if (p.t_gen >= sc.horizon) continue;
        engine.schedule(p.t_gen, EventKind::PacketArrival, p.source, [&, p] {
            result.metrics.record_generated(p);
            const auto i = static_cast<std::size_t>(p.source - 1);
            if (sc.protocol == Protocol::Idsme) {
                idsme_nodes[i]->enqueue(p);
            } else {
                frag_nodes[i]->enqueue(p);
            }
        });
    }

    RunTrace trace = engine.run_until(sc.horizon);
    result.digest = trace.digest;
    result.events = trace.processed;
    result.trace = std::move(trace.events);

    auto count_held = [&](const std::vector<Packet>& held) {
        for (const Packet& p : held) {
            if (!result.metrics.delivered(p.id)) result.in_flight[static_cast<std::size_t>(p.priority)] += 1;
        }
    };
    for (const auto& n : frag_nodes) count_held(n->held_packets());
    for (const auto& n : idsme_nodes) count_held(n->held_packets());

    if (options.log_frames) result.frames = medium.log();
    if (idsme_sink) result.cap_history = idsme_sink->cap_history();
    return result;
}

}  // namespace dyfrag
