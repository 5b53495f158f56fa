#pragma once

#include <cstdint>
#include <random>

#include "dyfrag/core/time.hpp"

namespace dyfrag {

enum class StreamPurpose : std::uint32_t {
    TrafficNormal = 1,
    TrafficUrgent = 2,
    Mac = 3,
    Channel = 4,
    Test = 99,
};

/// Deterministic per-(node, purpose) random stream derived from a master seed.
///
/// Streams never share generator state, so draws on one stream leave every
/// other stream untouched. Conversions to real/integer values are done here
/// rather than through <random> distributions, whose outputs are
/// implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, NodeId node, StreamPurpose purpose);

    /// Next value in [0, 1).
    double uniform();
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    /// Exponential variate with the given rate (events per unit).
    double exponential(double rate);

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace dyfrag
