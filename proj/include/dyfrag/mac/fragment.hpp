#pragma once

#include <cstdint>
#include <vector>

namespace dyfrag {

struct Fragment {
    std::uint64_t packet_id = 0;
    int index = 0;
    int count = 1;
    int units = 0;

    bool operator==(const Fragment&) const = default;
};

/// Splits a payload into ceil(payload / size) fragments of `size` units; only
/// the last one may be shorter. Throws std::invalid_argument on non-positive input.
std::vector<Fragment> fragment_packet(std::uint64_t packet_id, int payload_units, int fragment_size);

inline int fragment_count(int payload_units, int fragment_size) {
    return (payload_units + fragment_size - 1) / fragment_size;
}

}  // namespace dyfrag
