#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dyfrag/mac/frog.hpp"
#include "dyfrag/mac/idsme.hpp"
#include "dyfrag/radio/medium.hpp"
#include "dyfrag/traffic/traffic.hpp"

namespace dyfrag {

enum class Protocol : std::uint8_t { Frog, DyFrag, Idsme };

const char* to_string(Protocol p);
/// Accepts FROG, DYFRAG, IDSME (case-insensitive).
std::optional<Protocol> parse_protocol(std::string_view text);

/// One simulation setup: sink 0 plus `sources` source nodes.
struct Scenario {
    Protocol protocol = Protocol::Frog;
    int sources = 10;
    SimTime horizon = SimTime::s(120);
    std::uint64_t seed = 1;

    MediumConfig medium{};
    AirtimeModel airtime{};
    /// Sources sit on a circle of this fraction of the radio range around the sink.
    double ring_fraction = 0.5;
    /// Overrides the circle when non-empty; must list ids 0..sources.
    std::vector<NodePlacement> positions;

    TrafficProfile traffic{};  // node field is ignored; every source uses this profile
    FrogConfig frog{};
    DyFragParams dyfrag{};
    IdsmeConfig idsme{};

    /// Throws ConfigError.
    void validate() const;
    std::vector<NodePlacement> layout() const;
    /// Protocol configs with the shared airtime model applied.
    FrogConfig frog_config() const;
    IdsmeConfig idsme_config() const;
};

/// Parses the sectioned key=value format (see README). Errors carry "line N:".
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// "1..10", "2,16", "1..3,8" -> expanded list. Throws ConfigError.
std::vector<long long> parse_int_list(std::string_view text);

}  // namespace dyfrag
