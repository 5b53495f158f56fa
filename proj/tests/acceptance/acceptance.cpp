// Runs the desk-scale sweep (3 protocols x 1..10 sources x fragment size
// {16, 2} x seeds 1..10, 120 s) plus scripted and Monte-Carlo checks, and
// prints one PASS/FAIL line per acceptance criterion. Exit status is non-zero
// if any criterion fails. Optional argv[1]: path to write the sweep CSV.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <sstream>
#include <string>
#include <vector>

#include "../common/trace_checks.hpp"
#include "dyfrag/exp/experiment.hpp"
#include "dyfrag/mac/fragment.hpp"

using namespace dyfrag;

namespace {

constexpr int kMaxNodes = 10;
constexpr int kMinOrdered = 4;  // orderings are checked for N >= 4

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int frag_axis(const ResultRow& r) { return std::stoi(r.scenario_id.substr(r.scenario_id.rfind("-f") + 2)); }

struct Stat {
    double mean = 0.0;
    double se = 0.0;
    int n = 0;
};

Stat stat_of(const std::vector<double>& xs) {
    Stat s;
    s.n = static_cast<int>(xs.size());
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.se = std::sqrt(ss / (s.n - 1) / s.n);
    }
    return s;
}

// Series key: (protocol, fragment axis, class). Values indexed by source count.
struct SeriesKey {
    Protocol protocol;
    int frag;
    Priority cls;
    auto operator<=>(const SeriesKey&) const = default;
};

std::string name_of(const SeriesKey& k) {
    std::string s = to_string(k.protocol);
    if (k.protocol == Protocol::Frog) s += "-F" + std::to_string(k.frag);
    return s + "/" + to_string(k.cls);
}

struct Table {
    std::map<SeriesKey, std::map<int, std::vector<double>>> delay;
    std::map<SeriesKey, std::map<int, std::vector<double>>> throughput;

    Stat delay_at(const SeriesKey& k, int n) const { return stat_of(delay.at(k).at(n)); }
    Stat tput_at(const SeriesKey& k, int n) const { return stat_of(throughput.at(k).at(n)); }
};

Table tabulate(const std::vector<ResultRow>& rows) {
    Table t;
    for (const auto& r : rows) {
        if (!r.error.empty()) continue;
        const SeriesKey k{r.protocol, frag_axis(r), r.cls};
        auto& d = t.delay[k][r.nodes];
        if (r.avg_delay_s) d.push_back(*r.avg_delay_s);
        t.throughput[k][r.nodes].push_back(r.throughput);
    }
    return t;
}

std::vector<SeriesKey> main_series() {
    std::vector<SeriesKey> out;
    for (Priority c : {Priority::Normal, Priority::Urgent}) {
        out.push_back({Protocol::Frog, 16, c});
        out.push_back({Protocol::Frog, 2, c});
        out.push_back({Protocol::DyFrag, 16, c});
        out.push_back({Protocol::Idsme, 16, c});
    }
    return out;
}

// Non-increasing (or non-decreasing) in N with a one-pooled-SE allowance per step.
std::string monotone_violations(const std::map<int, std::vector<double>>& series, int from, bool increasing) {
    std::string bad;
    for (int n = from; n < kMaxNodes; ++n) {
        const Stat a = stat_of(series.at(n));
        const Stat b = stat_of(series.at(n + 1));
        const double pooled = std::sqrt(a.se * a.se + b.se * b.se);
        const double step = increasing ? b.mean - a.mean : a.mean - b.mean;
        if (step < -pooled) {
            bad += " N" + std::to_string(n) + "->" + std::to_string(n + 1) + " (" + fmt("%.3g", step) + ", se " +
                   fmt("%.3g", pooled) + ")";
        }
    }
    return bad;
}

// ---------------------------------------------------------------------------
// Criterion 7 oracle: the size is f_min << k, k counted directly.

struct Ladder {
    int f_min;
    int k_max = 0;
    int k = 0;
    bool seen = false;
    Ladder(int fmin, int fmax) : f_min(fmin) {
        while ((fmin << k_max) < fmax) ++k_max;
        k = k_max;
    }
    void urgent() {
        k = k > 0 ? k - 1 : 0;
        seen = true;
    }
    void cycle_end() {
        if (!seen && k < k_max) ++k;
        seen = false;
    }
    int size() const { return f_min << k; }
};

std::string controller_oracle() {
    std::string bad;
    // Fig 2 narrative, one entry per cycle: urgent arrivals in that cycle.
    {
        FragController c(2, 64);
        std::vector<int> counts;
        for (int u : {1, 0, 0, 1, 1}) {
            for (int i = 0; i < u; ++i) c.on_urgent_arrival();
            c.on_cycle_end();
            counts.push_back(fragment_count(64, c.current()));
        }
        if (counts != std::vector<int>{2, 1, 1, 2, 4}) bad += " narrative";
    }
    // Timeline {urgent @ 0.2 T_A, quiet, quiet} from 64.
    {
        Engine e;
        MacLog log;
        const SimTime ta = SimTime::ms(25);
        DyFragPolicy p(e, 0, DyFragParams{2, 64, ta}, &log);
        e.schedule(SimTime::ms(5), EventKind::TimerExpiry, 0, [&] { p.observe_urgent(1); });
        e.run_until(SimTime::ms(5) + ta * 3);
        std::vector<int> traj{64};
        for (const auto& s : log.sizes) {
            if (s.cause == SizeChange::Cause::CycleEnd) traj.push_back(s.size);
        }
        if (traj != std::vector<int>{64, 32, 64, 64}) bad += " trajectory";
    }
    // Random timelines through the engine, replayed event for event.
    RngStream gen(77, 0, StreamPurpose::Test);
    int events = 0;
    for (int trial = 0; trial < 300; ++trial) {
        Engine e;
        MacLog log;
        const SimTime ta = SimTime::ms(5 + static_cast<std::int64_t>(gen.below(50)));
        DyFragPolicy p(e, 0, DyFragParams{2, 64, ta}, &log);
        const int urgents = static_cast<int>(gen.below(40));
        for (int i = 0; i < urgents; ++i) {
            const auto id = static_cast<std::uint64_t>(1 + gen.below(30));  // repeats must count once
            e.schedule(SimTime(static_cast<std::int64_t>(gen.below(2'000'000))), EventKind::TimerExpiry, 0,
                       [&p, id] { p.observe_urgent(id); });
        }
        e.run_until(SimTime::s(2));
        Ladder o(2, 64);
        std::set<std::uint64_t> seen_ids;
        SimTime restart{};
        for (const auto& s : log.sizes) {
            ++events;
            if (s.cause == SizeChange::Cause::Urgent) {
                o.urgent();
                restart = s.time;
            } else {
                o.cycle_end();
                if (s.time != restart + ta) bad += " cycle-timing";
                restart = s.time;
            }
            if (s.size != o.size()) {
                bad += " trial" + std::to_string(trial);
                break;
            }
        }
    }
    return bad.empty() ? std::to_string(events) + " logged controller events match the replay" : bad;
}

// ---------------------------------------------------------------------------

Packet make(NodeId node, Priority p, std::uint32_t seq, SimTime at) {
    return {make_packet_id(node, p, seq), node, p, p == Priority::Urgent ? 16 : 64, at};
}

struct ScriptedResult {
    std::size_t samples = 0;
    std::vector<std::string> violations;
};

ScriptedResult scripted_preemption() {
    ScriptedResult out;
    auto check = [&](const Scenario& sc, std::vector<Packet> pkts, const std::string& tag) {
        RunOptions opt;
        opt.log_frames = true;
        opt.scripted = std::move(pkts);
        const RunResult r = run_scenario(sc, opt);
        const auto samples = checks::preemption_samples(r.frames, r.arrivals, sc.frog_config());
        out.samples += samples.size();
        for (auto v : checks::preemption_bound(samples)) out.violations.push_back(tag + ": " + v);
        for (auto v : checks::pause_silence(r.frames, r.mac_log)) out.violations.push_back(tag + ": " + v);
        for (auto v : checks::paused_sender_no_overlap(r.frames, r.mac_log)) out.violations.push_back(tag + ": " + v);
    };

    Scenario base;
    base.horizon = SimTime::s(1);
    base.medium.p_edge = 1.0;

    // Two preemptions of one four-fragment packet.
    Scenario hand = base;
    hand.protocol = Protocol::Frog;
    hand.sources = 2;
    hand.frog.min_be = 0;
    hand.frog.urgent_jitter_slots = 1;
    check(hand, {make(1, Priority::Normal, 0, SimTime(1000)), make(2, Priority::Urgent, 0, SimTime(2000)),
                 make(2, Priority::Urgent, 1, SimTime(7000))},
          "hand-trace");

    RngStream gen(88, 0, StreamPurpose::Test);
    for (int trial = 0; trial < 200; ++trial) {
        Scenario sc = base;
        sc.protocol = trial % 2 ? Protocol::DyFrag : Protocol::Frog;
        sc.sources = 2 + trial % 3;
        sc.frog.fragment_size = trial % 4 < 2 ? 16 : 2;
        sc.seed = static_cast<std::uint64_t>(trial + 1);
        std::vector<Packet> pkts;
        for (std::uint32_t k = 0; k < 40; ++k) {
            pkts.push_back(make(1, Priority::Normal, k, SimTime::ms(5) + SimTime::ms(20) * k));
        }
        for (NodeId n = 2; n <= sc.sources; ++n) {
            for (std::uint32_t k = 0; k < 10; ++k) {
                pkts.push_back(make(n, Priority::Urgent, k, SimTime(static_cast<std::int64_t>(gen.below(900'000)))));
            }
        }
        std::sort(pkts.begin(), pkts.end(), [](const Packet& a, const Packet& b) { return a.t_gen < b.t_gen; });
        check(sc, pkts, "scripted#" + std::to_string(trial));
    }
    return out;
}

double delivery_ratio(double d, double p_edge) {
    struct Count : RadioListener {
        int ok = 0;
        void on_frame(const Frame&, Verdict v) override { ok += v == Verdict::Delivered; }
    };
    Engine e;
    MediumConfig cfg;
    cfg.p_edge = p_edge;
    Medium m(e, cfg, {{0, {0, 0}}, {1, {d, 0}}}, 2024);
    Count c;
    m.attach(0, &c);
    const int frames = 10000;
    for (int k = 0; k < frames; ++k) {
        e.schedule(SimTime::ms(k), EventKind::FrameTxStart, 1, [&m] {
            Frame f;
            f.sender = 1;
            f.airtime = SimTime::us(352);
            m.transmit(f);
        });
    }
    e.run_until(SimTime::ms(frames + 1));
    return static_cast<double>(c.ok) / frames;
}

}  // namespace

int main(int argc, char** argv) {
    Scenario base;  // all defaults: 120 s horizon
    SweepAxes axes;
    axes.protocols = {Protocol::Frog, Protocol::DyFrag, Protocol::Idsme};
    for (int n = 1; n <= kMaxNodes; ++n) axes.node_counts.push_back(n);
    axes.fragment_sizes = {16, 2};
    for (std::uint64_t s = 1; s <= 10; ++s) axes.seeds.push_back(s);

    SweepOptions opt;
    opt.verify_determinism = true;
    const auto rows = sweep(base, axes, opt);
    if (argc > 1) {
        std::ofstream out(argv[1]);
        write_csv(out, rows);
    }

    // 1. Determinism.
    {
        int nondet = 0;
        int errors = 0;
        for (const auto& r : rows) {
            if (r.error.find("nondeterministic") != std::string::npos) ++nondet;
            else if (!r.error.empty()) ++errors;
        }
        report(1, "determinism", nondet == 0 && errors == 0 && rows.size() == 1200,
               std::to_string(rows.size()) + " rows, " + std::to_string(nondet) + " nondeterministic, " +
                   std::to_string(errors) + " failed cells");
    }

    const Table t = tabulate(rows);

    // 2. Delay non-decreasing in N.
    {
        std::string bad;
        for (const auto& k : main_series()) {
            const auto v = monotone_violations(t.delay.at(k), 1, true);
            if (!v.empty()) bad += " " + name_of(k) + ":" + v;
        }
        report(2, "delay grows with contention", bad.empty(), bad.empty() ? "8 series, all steps within 1 pooled SE" : bad);
    }

    auto delay = [&](Protocol p, int f, Priority c, int n) { return t.delay_at({p, f, c}, n).mean; };

    // 3. Urgent ordering at F = 16.
    {
        std::string bad;
        std::string vals;
        for (int n = kMinOrdered; n <= kMaxNodes; ++n) {
            const double fr = delay(Protocol::Frog, 16, Priority::Urgent, n);
            const double dy = delay(Protocol::DyFrag, 16, Priority::Urgent, n);
            const double id = delay(Protocol::Idsme, 16, Priority::Urgent, n);
            vals += " N" + std::to_string(n) + " " + fmt("%.2f", fr * 1e3) + "/" + fmt("%.2f", dy * 1e3) + "/" +
                    fmt("%.2f", id * 1e3);
            if (!(fr <= dy)) bad += " N" + std::to_string(n) + ":FROG>DYFRAG";
            if (!(dy < id)) bad += " N" + std::to_string(n) + ":DYFRAG>=IDSME";
        }
        report(3, "urgent delay FROG <= DYFRAG < IDSME", bad.empty(), (bad.empty() ? "" : bad + ";") + " ms" + vals);
    }

    // 4. Normal ordering.
    {
        std::string bad;
        std::string vals;
        for (int n = kMinOrdered; n <= kMaxNodes; ++n) {
            const double fr = delay(Protocol::Frog, 16, Priority::Normal, n);
            const double dy = delay(Protocol::DyFrag, 16, Priority::Normal, n);
            const double id = delay(Protocol::Idsme, 16, Priority::Normal, n);
            vals += " N" + std::to_string(n) + " " + fmt("%.1f", fr * 1e3) + "/" + fmt("%.1f", dy * 1e3) + "/" +
                    fmt("%.1f", id * 1e3);
            if (!(dy < fr)) bad += " N" + std::to_string(n) + ":DYFRAG>=FROG";
            if (!(dy < id)) bad += " N" + std::to_string(n) + ":DYFRAG>=IDSME";
        }
        report(4, "normal delay DYFRAG < FROG, IDSME", bad.empty(),
               (bad.empty() ? "" : bad + ";") + " ms FROG/DYFRAG/IDSME" + vals);
    }

    // 5. Fragment-size sensitivity.
    {
        std::string bad;
        std::string vals;
        for (int n = kMinOrdered; n <= kMaxNodes; ++n) {
            const double n16 = delay(Protocol::Frog, 16, Priority::Normal, n);
            const double n2 = delay(Protocol::Frog, 2, Priority::Normal, n);
            const double u16 = delay(Protocol::Frog, 16, Priority::Urgent, n);
            const double u2 = delay(Protocol::Frog, 2, Priority::Urgent, n);
            vals += " N" + std::to_string(n) + " urgent " + fmt("%.3f", u16 * 1e3) + "->" + fmt("%.3f", u2 * 1e3);
            if (!(n2 > n16)) bad += " N" + std::to_string(n) + ":normal-not-up";
            if (!(u2 < u16)) bad += " N" + std::to_string(n) + ":urgent-not-down";
        }
        int unchanged = 0;
        int changed = 0;
        std::map<std::tuple<Protocol, int, std::uint64_t, Priority>, std::vector<ResultRow>> cells;
        for (const auto& r : rows) {
            if (r.protocol == Protocol::Frog) continue;
            ResultRow stripped = r;
            stripped.scenario_id.clear();
            cells[{r.protocol, r.nodes, r.seed, r.cls}].push_back(stripped);
        }
        for (const auto& [key, group] : cells) {
            const bool same = std::all_of(group.begin(), group.end(), [&](const ResultRow& x) { return x == group[0]; });
            (same && group.size() == 2 ? unchanged : changed) += 1;
        }
        if (changed) bad += " " + std::to_string(changed) + " DYFRAG/IDSME rows change with F";
        report(5, "fragment-size sensitivity", bad.empty(),
               (bad.empty() ? "" : bad + ";") + " FROG F16->F2 ms" + vals + "; " + std::to_string(unchanged) +
                   " DYFRAG/IDSME row pairs invariant");
    }

    // 6. Throughput trends.
    {
        std::string bad;
        std::string knees;
        for (const auto& k : main_series()) {
            const auto& s = t.throughput.at(k);
            int knee = 1;
            for (int n = 1; n <= kMaxNodes; ++n) {
                if (stat_of(s.at(n)).mean > stat_of(s.at(knee)).mean) knee = n;
            }
            knees += " " + name_of(k) + "@" + std::to_string(knee);
            const auto v = monotone_violations(s, knee, false);
            if (!v.empty()) bad += " " + name_of(k) + ":" + v;
        }
        // Series level: mean over all source counts and seeds.
        std::map<SeriesKey, double> level;
        for (Protocol p : {Protocol::Frog, Protocol::DyFrag, Protocol::Idsme}) {
            for (Priority c : {Priority::Normal, Priority::Urgent}) {
                std::vector<double> all;
                for (const auto& [n, xs] : t.throughput.at({p, 16, c})) all.insert(all.end(), xs.begin(), xs.end());
                level[{p, 16, c}] = stat_of(all).mean;
            }
        }
        const SeriesKey fu{Protocol::Frog, 16, Priority::Urgent};
        const SeriesKey fn{Protocol::Frog, 16, Priority::Normal};
        for (const auto& [k, v] : level) {
            if (k != fu && !(level[fu] > v)) bad += " FROG/urgent-not-max(vs " + name_of(k) + ")";
            if (k != fn && !(level[fn] < v)) bad += " FROG/normal-not-min(vs " + name_of(k) + ")";
        }
        for (Priority c : {Priority::Normal, Priority::Urgent}) {
            if (!(level[{Protocol::DyFrag, 16, c}] > level[{Protocol::Idsme, 16, c}])) {
                bad += std::string(" DYFRAG<=IDSME/") + to_string(c);
            }
        }
        std::string vals;
        for (const auto& [k, v] : level) vals += " " + name_of(k) + "=" + fmt("%.2f", v);
        report(6, "throughput trends", bad.empty(),
               (bad.empty() ? "" : bad + ";") + " knees" + knees + "; units/s" + vals);
    }

    // 7. Controller oracle.
    {
        const std::string r = controller_oracle();
        report(7, "controller oracle", r.find("match") != std::string::npos, r);
    }

    // 8, 9, 11 on frame logs of every sweep cell.
    std::vector<std::string> preempt_bad;
    std::vector<std::string> idsme_bad;
    std::vector<std::string> conserve_bad;
    std::size_t pauses = 0;
    std::size_t frog_runs = 0;
    std::size_t idsme_runs = 0;
    for (Protocol p : axes.protocols) {
        for (int n : axes.node_counts) {
            for (int f : axes.fragment_sizes) {
                if (p != Protocol::Frog && f != 16) continue;  // F does not affect these runs (criterion 5)
                for (std::uint64_t seed : axes.seeds) {
                    Scenario sc = base;
                    sc.protocol = p;
                    sc.sources = n;
                    sc.frog.fragment_size = f;
                    sc.seed = seed;
                    RunOptions ro;
                    ro.log_frames = true;
                    const RunResult r = run_scenario(sc, ro);
                    const std::string tag = scenario_id(p, n, f) + "/s" + std::to_string(seed) + ": ";
                    for (auto v : checks::conservation(r)) conserve_bad.push_back(tag + v);
                    if (p == Protocol::Idsme) {
                        ++idsme_runs;
                        for (auto v : checks::no_preemption(r.frames)) idsme_bad.push_back(tag + v);
                        for (auto v : checks::grant_exclusivity(r.frames)) idsme_bad.push_back(tag + v);
                    } else {
                        ++frog_runs;
                        pauses += r.mac_log.pauses.size();
                        for (auto v : checks::pause_silence(r.frames, r.mac_log)) preempt_bad.push_back(tag + v);
                        for (auto v : checks::paused_sender_no_overlap(r.frames, r.mac_log)) preempt_bad.push_back(tag + v);
                        for (auto v : checks::head_of_line(r.frames, r.arrivals, sc.horizon)) preempt_bad.push_back(tag + v);
                    }
                }
            }
        }
    }
    {
        const ScriptedResult s = scripted_preemption();
        for (const auto& v : s.violations) preempt_bad.push_back(v);
        std::string detail = std::to_string(frog_runs) + " sweep traces (" + std::to_string(pauses) +
                             " pauses) + 201 scripted loss-free runs (" + std::to_string(s.samples) +
                             " bounded urgent waits), " + std::to_string(preempt_bad.size()) + " violations";
        if (!preempt_bad.empty()) detail += "; first: " + preempt_bad.front();
        report(8, "preemption invariants", preempt_bad.empty() && s.samples > 0, detail);
    }
    {
        std::string detail = std::to_string(idsme_runs) + " IDSME traces, " + std::to_string(idsme_bad.size()) +
                             " violations";
        if (!idsme_bad.empty()) detail += "; first: " + idsme_bad.front();
        report(9, "IDSME no-preemption", idsme_bad.empty(), detail);
    }

    // 10. Radio Monte-Carlo.
    {
        const MediumConfig cfg;
        std::string vals;
        bool ok = true;
        for (double d : {0.0, cfg.range_m / 2, cfg.range_m}) {
            const double want = reception_probability(d, cfg.range_m, cfg.p_edge);
            const double got = delivery_ratio(d, cfg.p_edge);
            ok &= std::fabs(got - want) <= 0.02;
            vals += " d=" + fmt("%.0f", d) + " " + fmt("%.4f", got) + " vs " + fmt("%.4f", want) + ";";
        }
        report(10, "radio Monte-Carlo", ok, "10^4 frames per point, tol 0.02:" + vals);
    }

    // 11. Conservation.
    {
        for (const auto& r : rows) {
            if (r.error.empty() && r.generated != r.delivered + r.drop_count + r.in_flight) {
                conserve_bad.push_back(r.scenario_id + "/s" + std::to_string(r.seed) + "/" + to_string(r.cls));
            }
        }
        std::string detail = std::to_string(rows.size()) + " rows + " + std::to_string(frog_runs + idsme_runs) +
                             " logged runs, " + std::to_string(conserve_bad.size()) + " violations";
        if (!conserve_bad.empty()) detail += "; first: " + conserve_bad.front();
        report(11, "metric conservation", conserve_bad.empty(), detail);
    }

    std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
