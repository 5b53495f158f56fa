#include "dyfrag/mac/fragment.hpp"

#include <algorithm>
#include <stdexcept>

namespace dyfrag {

std::vector<Fragment> fragment_packet(std::uint64_t packet_id, int payload_units, int fragment_size) {
    if (payload_units < 1) throw std::invalid_argument("fragment_packet: payload must be >= 1 unit");
    if (fragment_size < 1) throw std::invalid_argument("fragment_packet: fragment size must be >= 1");
    const int count = fragment_count(payload_units, fragment_size);
    std::vector<Fragment> out;
    out.reserve(static_cast<std::size_t>(count));
    int remaining = payload_units;
    for (int i = 0; i < count; ++i) {
        const int units = std::min(fragment_size, remaining);
        out.push_back(Fragment{packet_id, i, count, units});
        remaining -= units;
    }
    return out;
}

}  // namespace dyfrag
