#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace dyfrag {

/// Virtual time in integer microsecond ticks.
struct SimTime {
    std::int64_t ticks = 0;

    constexpr SimTime() = default;
    constexpr explicit SimTime(std::int64_t t) : ticks(t) {}

    static constexpr SimTime us(std::int64_t v) { return SimTime{v}; }
    static constexpr SimTime ms(std::int64_t v) { return SimTime{v * 1000}; }
    static constexpr SimTime s(std::int64_t v) { return SimTime{v * 1'000'000}; }
    static SimTime from_seconds(double sec) { return SimTime{std::llround(sec * 1e6)}; }

    constexpr double seconds() const { return static_cast<double>(ticks) * 1e-6; }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime& operator+=(SimTime o) { ticks += o.ticks; return *this; }
    constexpr SimTime& operator-=(SimTime o) { ticks -= o.ticks; return *this; }
    friend constexpr SimTime operator+(SimTime a, SimTime b) { return SimTime{a.ticks + b.ticks}; }
    friend constexpr SimTime operator-(SimTime a, SimTime b) { return SimTime{a.ticks - b.ticks}; }
    friend constexpr SimTime operator*(SimTime a, std::int64_t k) { return SimTime{a.ticks * k}; }
    friend constexpr SimTime operator*(std::int64_t k, SimTime a) { return SimTime{a.ticks * k}; }
};

using NodeId = int;
inline constexpr NodeId kBroadcast = -1;

}  // namespace dyfrag
