#pragma once

#include "dyfrag/core/time.hpp"

namespace dyfrag {

/// Adaptive fragment size for normal traffic.
///
/// Starts at max_size (no fragmentation). Every urgent arrival halves the
/// size down to min_size; an assessment cycle that ends without an urgent
/// arrival doubles it back up to max_size. The size always sits on the
/// ladder min_size * 2^k. Cycle timing is owned by the caller: after
/// on_urgent_arrival() the caller restarts its cycle timer.
class FragController {
public:
    FragController(int min_size, int max_size);

    int current() const { return current_; }
    int min_size() const { return min_; }
    int max_size() const { return max_; }
    bool urgent_seen() const { return urgent_seen_; }

    void on_urgent_arrival();
    void on_cycle_end();

private:
    int min_;
    int max_;
    int current_;
    bool urgent_seen_ = false;
};

/// f_max must equal f_min * 2^k so that both bounds sit on the ladder.
struct DyFragParams {
    int f_min = 2;
    int f_max = 64;
    SimTime t_assess = SimTime::ms(25);

    void validate() const;
};

}  // namespace dyfrag
