#include "dyfrag/core/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dyfrag {

RngStream::RngStream(std::uint64_t master_seed, NodeId node, StreamPurpose purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(node),
                      static_cast<std::uint32_t>(purpose),
                      0x9e3779b9u};
    engine_.seed(seq);
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RngStream::below: bound must be positive");
    // Rejection sampling keeps the result exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % bound;
}

double RngStream::exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
}

}  // namespace dyfrag
