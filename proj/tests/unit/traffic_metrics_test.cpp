#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dyfrag/core/errors.hpp"
#include "dyfrag/traffic/metrics.hpp"
#include "dyfrag/traffic/traffic.hpp"

namespace dyfrag {
namespace {

TEST(Traffic, ZeroRateNoArrivals) {
    TrafficProfile p;
    p.normal_rate = 0.0;
    p.urgent_rate = 0.0;
    EXPECT_TRUE(generate_arrivals(p, SimTime::s(100), 1).empty());
}

TEST(Traffic, PeriodicEvenlySpaced) {
    TrafficProfile p;
    p.process = ArrivalProcess::Periodic;
    p.normal_rate = 2.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RngStream s(seed, 1, StreamPurpose::TrafficNormal);
        const auto a = generate_arrivals(p, Priority::Normal, SimTime::s(3), s);
        ASSERT_EQ(a.size(), 6u) << seed;
        EXPECT_LT(a.front().t_gen, SimTime::ms(500));
        for (std::size_t i = 1; i < a.size(); ++i) {
            EXPECT_LE(std::llabs((a[i].t_gen - a[i - 1].t_gen).ticks - 500000), 1);
        }
    }
}

TEST(Traffic, PoissonCountConcentration) {
    TrafficProfile p;
    p.normal_rate = 10.0;
    const double tol = 3.0 * std::sqrt(1000.0);
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        RngStream s(seed, 1, StreamPurpose::TrafficNormal);
        const auto n = static_cast<double>(generate_arrivals(p, Priority::Normal, SimTime::s(100), s).size());
        inside += std::fabs(n - 1000.0) <= tol;
    }
    EXPECT_GE(inside, 99);
}

TEST(Traffic, PacketsAreWellFormed) {
    TrafficProfile p;
    p.node = 3;
    const auto all = generate_arrivals(p, SimTime::s(60), 5);
    std::set<std::uint64_t> ids;
    SimTime prev{};
    for (const auto& pk : all) {
        EXPECT_EQ(pk.source, 3);
        EXPECT_TRUE(ids.insert(pk.id).second);
        EXPECT_GE(pk.t_gen, prev);
        EXPECT_LT(pk.t_gen, SimTime::s(60));
        EXPECT_EQ(pk.payload_units, pk.priority == Priority::Urgent ? 16 : 64);
        prev = pk.t_gen;
    }
}

TEST(Traffic, StreamsKeyedByNode) {
    TrafficProfile a;
    a.node = 2;
    TrafficProfile b = a;
    b.normal_payload = 32;  // other knobs do not move the arrival times
    const auto x = generate_arrivals(a, SimTime::s(30), 7);
    const auto y = generate_arrivals(b, SimTime::s(30), 7);
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_EQ(x[i].id, y[i].id);
        EXPECT_EQ(x[i].t_gen, y[i].t_gen);
    }
}

TEST(Traffic, ValidateRejectsBadProfiles) {
    TrafficProfile p;
    p.urgent_rate = -1;
    EXPECT_THROW(p.validate(), ConfigError);
    p = {};
    p.normal_payload = 0;
    EXPECT_THROW(p.validate(), ConfigError);
}

Packet pkt(std::uint64_t id, Priority cls, SimTime t_gen, int units = 64) {
    return Packet{id, 1, cls, units, t_gen};
}

TEST(Metrics, DelaySample) {
    Metrics m;
    const Packet p = pkt(1, Priority::Normal, SimTime::s(1));
    m.record_generated(p);
    m.record_delivery(p, SimTime::ms(1200));
    ASSERT_EQ(m.of(Priority::Normal).delay_samples.size(), 1u);
    EXPECT_EQ(m.of(Priority::Normal).delay_samples[0], SimTime::ms(200));
    EXPECT_NEAR(*m.avg_delay(Priority::Normal), 0.2, 1e-12);
}

TEST(Metrics, NonPositiveDelayAndDuplicateAreViolations) {
    Metrics m;
    const Packet p = pkt(1, Priority::Normal, SimTime::s(1));
    m.record_generated(p);
    EXPECT_THROW(m.record_delivery(p, SimTime::s(1)), ContractViolation);
    m.record_delivery(p, SimTime::s(2));
    EXPECT_THROW(m.record_delivery(p, SimTime::s(3)), ContractViolation);
    EXPECT_THROW(m.record_generated(p), ContractViolation);
    EXPECT_THROW(m.record_delivery(pkt(99, Priority::Normal, SimTime{}), SimTime::s(1)), ContractViolation);
}

TEST(Metrics, AverageAndNoDataMarker) {
    Metrics m;
    EXPECT_FALSE(m.avg_delay(Priority::Urgent).has_value());
    const Packet a = pkt(1, Priority::Urgent, SimTime{}, 16);
    const Packet b = pkt(2, Priority::Urgent, SimTime{}, 16);
    m.record_generated(a);
    m.record_generated(b);
    m.record_delivery(a, SimTime::ms(100));
    m.record_delivery(b, SimTime::ms(300));
    EXPECT_NEAR(*m.avg_delay(Priority::Urgent), 0.2, 1e-12);
    EXPECT_EQ(m.of(Priority::Urgent).delay_samples.size(), 2u);
    EXPECT_FALSE(m.avg_delay(Priority::Normal).has_value());
}

TEST(Metrics, Throughput) {
    Metrics m;
    for (std::uint64_t i = 1; i <= 10; ++i) {
        const Packet p = pkt(i, Priority::Normal, SimTime{});
        m.record_generated(p);
        m.record_delivery(p, SimTime::ms(5));
    }
    EXPECT_DOUBLE_EQ(m.throughput(Priority::Normal, SimTime::s(10)), 64.0);
    EXPECT_THROW(m.throughput(Priority::Normal, SimTime{}), ContractViolation);
}

TEST(Metrics, DropCounting) {
    Metrics m;
    const Packet p = pkt(1, Priority::Normal, SimTime{});
    const Packet q = pkt(2, Priority::Normal, SimTime{});
    m.record_generated(p);
    m.record_generated(q);
    EXPECT_TRUE(m.record_drop(p, SimTime::ms(1)));
    EXPECT_FALSE(m.record_drop(p, SimTime::ms(2)));
    m.record_delivery(q, SimTime::ms(3));
    EXPECT_FALSE(m.record_drop(q, SimTime::ms(4)));
    EXPECT_EQ(m.of(Priority::Normal).dropped, 1);
    EXPECT_EQ(m.of(Priority::Normal).delivered, 1);
    EXPECT_EQ(m.of(Priority::Normal).generated, 2);
}

}  // namespace
}  // namespace dyfrag
