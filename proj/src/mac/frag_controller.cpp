#include "dyfrag/mac/frag_controller.hpp"

#include <algorithm>
#include <string>

#include "dyfrag/core/errors.hpp"

namespace dyfrag {

namespace {
bool on_ladder(int min_size, int max_size) {
    int v = min_size;
    while (v < max_size) v *= 2;
    return v == max_size;
}
}  // namespace

void DyFragParams::validate() const {
    if (f_min < 1) throw ConfigError("f_min must be >= 1");
    if (f_max < f_min) {
        throw ConfigError("f_min (" + std::to_string(f_min) + ") exceeds f_max (" +
                          std::to_string(f_max) + ")");
    }
    if (!on_ladder(f_min, f_max)) throw ConfigError("f_max must be f_min times a power of two");
    if (t_assess.ticks <= 0) throw ConfigError("t_assess must be positive");
}

FragController::FragController(int min_size, int max_size)
    : min_(min_size), max_(max_size), current_(max_size) {
    DyFragParams{min_size, max_size, SimTime::us(1)}.validate();
}

void FragController::on_urgent_arrival() {
    current_ = std::max(current_ / 2, min_);
    urgent_seen_ = true;
}

void FragController::on_cycle_end() {
    if (!urgent_seen_) current_ = std::min(current_ * 2, max_);
    urgent_seen_ = false;
}

}  // namespace dyfrag
