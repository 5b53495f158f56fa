#include "dyfrag/exp/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dyfrag {

const char* to_string(Protocol p) {
    switch (p) {
        case Protocol::Frog: return "FROG";
        case Protocol::DyFrag: return "DYFRAG";
        case Protocol::Idsme: return "IDSME";
    }
    return "?";
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
    s = trim(s);
    T value{};
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, value);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return value;
}

}  // namespace

std::optional<Protocol> parse_protocol(std::string_view text) {
    const std::string u = upper(trim(text));
    if (u == "FROG") return Protocol::Frog;
    if (u == "DYFRAG") return Protocol::DyFrag;
    if (u == "IDSME") return Protocol::Idsme;
    return std::nullopt;
}

std::vector<long long> parse_int_list(std::string_view text) {
    std::vector<long long> out;
    std::string_view rest = text;
    while (true) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        if (item.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
        if (const auto dots = item.find(".."); dots != std::string_view::npos) {
            const auto lo = parse_number<long long>(item.substr(0, dots));
            const auto hi = parse_number<long long>(item.substr(dots + 2));
            if (!lo || !hi || *lo > *hi) throw ConfigError("bad range '" + std::string(item) + "'");
            for (long long v = *lo; v <= *hi; ++v) out.push_back(v);
        } else {
            const auto v = parse_number<long long>(item);
            if (!v) throw ConfigError("bad integer '" + std::string(item) + "'");
            out.push_back(*v);
        }
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

void Scenario::validate() const {
    if (sources < 1) throw ConfigError("sources must be >= 1");
    if (horizon.ticks <= 0) throw ConfigError("horizon must be positive");
    if (!(ring_fraction > 0.0) || ring_fraction > 1.0) throw ConfigError("ring_fraction must lie in (0, 1]");
    if (!positions.empty() && static_cast<int>(positions.size()) != sources + 1) {
        throw ConfigError("explicit positions must list the sink and every source (" +
                          std::to_string(sources + 1) + " nodes)");
    }
    if (airtime.frame_overhead.ticks <= 0 || airtime.per_unit.ticks <= 0) {
        throw ConfigError("airtimes must be positive");
    }
    traffic.validate();
    switch (protocol) {
        case Protocol::Frog:
            frog_config().validate();
            break;
        case Protocol::DyFrag:
            frog_config().validate();
            dyfrag.validate();
            break;
        case Protocol::Idsme: {
            const IdsmeConfig cfg = idsme_config();
            cfg.validate();
            const int fit = cfg.total_slots - cfg.cap_max;
            for (int units : {traffic.normal_payload, traffic.urgent_payload}) {
                if (cfg.cells_needed(units) > fit) {
                    throw ConfigError("a " + std::to_string(units) + "-unit packet needs " +
                                      std::to_string(cfg.cells_needed(units)) +
                                      " GTS but the smallest CFP has " + std::to_string(fit));
                }
            }
            break;
        }
    }
    // Building the medium checks the placement ids.
    Engine probe;
    Medium check(probe, medium, layout(), 0);
}

std::vector<NodePlacement> Scenario::layout() const {
    if (!positions.empty()) return positions;
    return circular_layout(sources, ring_fraction * medium.range_m);
}

FrogConfig Scenario::frog_config() const {
    FrogConfig cfg = frog;
    cfg.airtime = airtime;
    return cfg;
}

IdsmeConfig Scenario::idsme_config() const {
    IdsmeConfig cfg = idsme;
    cfg.airtime = airtime;
    return cfg;
}

namespace {

struct Parser {
    Scenario sc;
    bool have_protocol = false;
    int line = 0;
    std::map<std::string, int> key_line;  // "section.key" -> line it was set on

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("line " + std::to_string(line) + ": " + msg);
    }

    template <typename T>
    T number(std::string_view key, std::string_view value) const {
        const auto v = parse_number<T>(value);
        if (!v) fail("'" + std::string(key) + "' expects a number, got '" + std::string(trim(value)) + "'");
        return *v;
    }
    int positive(std::string_view key, std::string_view value) const {
        const int v = number<int>(key, value);
        if (v < 1) fail("'" + std::string(key) + "' must be >= 1");
        return v;
    }
    int non_negative(std::string_view key, std::string_view value) const {
        const int v = number<int>(key, value);
        if (v < 0) fail("'" + std::string(key) + "' must be >= 0");
        return v;
    }
    SimTime micros(std::string_view key, std::string_view value) const {
        const auto v = number<long long>(key, value);
        if (v <= 0) fail("'" + std::string(key) + "' must be positive");
        return SimTime::us(v);
    }
    double real(std::string_view key, std::string_view value, double lo, double hi) const {
        const double v = number<double>(key, value);
        if (!(v >= lo && v <= hi)) {
            std::ostringstream os;
            os << "'" << key << "' must lie in [" << lo << ", " << hi << "]";
            fail(os.str());
        }
        return v;
    }

    void apply(const std::string& section, std::string_view key, std::string_view value) {
        const std::string k(key);
        if (section == "scenario") {
            if (k == "protocol") {
                const auto p = parse_protocol(value);
                if (!p) fail("unknown protocol '" + std::string(trim(value)) + "'");
                sc.protocol = *p;
                have_protocol = true;
            } else if (k == "sources") {
                sc.sources = number<int>(key, value);
                if (sc.sources < 1) fail("sources must be >= 1");
            } else if (k == "horizon_s") {
                const double h = number<double>(key, value);
                if (!(h > 0.0)) fail("horizon_s must be positive");
                sc.horizon = SimTime::from_seconds(h);
            } else if (k == "seed") {
                sc.seed = number<std::uint64_t>(key, value);
            } else {
                unknown(section, k);
            }
        } else if (section == "radio") {
            if (k == "range_m") {
                sc.medium.range_m = number<double>(key, value);
                if (!(sc.medium.range_m > 0.0)) fail("range_m must be positive");
            } else if (k == "p_edge") {
                sc.medium.p_edge = real(key, value, 0.0, 1.0);
            } else if (k == "unit_airtime_us") {
                sc.airtime.per_unit = micros(key, value);
            } else if (k == "overhead_us") {
                sc.airtime.frame_overhead = micros(key, value);
            } else {
                unknown(section, k);
            }
        } else if (section == "topology") {
            if (k == "ring_fraction") {
                sc.ring_fraction = real(key, value, 1e-9, 1.0);
            } else if (k.rfind("node.", 0) == 0) {
                const auto id = parse_number<int>(std::string_view(k).substr(5));
                if (!id || *id < 0) fail("bad node id in '" + k + "'");
                std::istringstream in{std::string(value)};
                Position pos;
                std::string extra;
                if (!(in >> pos.x >> pos.y) || (in >> extra)) fail("'" + k + "' expects 'x y'");
                for (const auto& p : sc.positions) {
                    if (p.id == *id) fail("node " + std::to_string(*id) + " placed twice");
                }
                sc.positions.push_back({*id, pos});
            } else {
                unknown(section, k);
            }
        } else if (section == "traffic") {
            if (k == "process") {
                const std::string u = upper(trim(value));
                if (u == "POISSON") {
                    sc.traffic.process = ArrivalProcess::Poisson;
                } else if (u == "PERIODIC") {
                    sc.traffic.process = ArrivalProcess::Periodic;
                } else {
                    fail("process must be poisson or periodic");
                }
            } else if (k == "normal_rate") {
                sc.traffic.normal_rate = real(key, value, 0.0, 1e6);
            } else if (k == "urgent_rate") {
                sc.traffic.urgent_rate = real(key, value, 0.0, 1e6);
            } else if (k == "normal_payload") {
                sc.traffic.normal_payload = positive(key, value);
            } else if (k == "urgent_payload") {
                sc.traffic.urgent_payload = positive(key, value);
            } else {
                unknown(section, k);
            }
        } else if (section == "mac") {
            FrogConfig& f = sc.frog;
            if (k == "fragment_size") f.fragment_size = positive(key, value);
            else if (k == "gap_us") f.gap = micros(key, value);
            else if (k == "cca_us") f.cca = micros(key, value);
            else if (k == "backoff_unit_us") f.backoff_unit = micros(key, value);
            else if (k == "min_be") f.min_be = non_negative(key, value);
            else if (k == "max_be") f.max_be = non_negative(key, value);
            else if (k == "max_retries") f.max_retries = non_negative(key, value);
            else if (k == "cts_wait_us") f.cts_wait = micros(key, value);
            else if (k == "ack_wait_us") f.ack_wait = micros(key, value);
            else if (k == "priority_ifs_us") f.priority_ifs = micros(key, value);
            else if (k == "urgent_jitter_slots") f.urgent_jitter_slots = positive(key, value);
            else if (k == "urgent_jitter_unit_us") f.urgent_jitter_unit = micros(key, value);
            else if (k == "stream_timeout_us") f.stream_timeout = micros(key, value);
            else unknown(section, k);
        } else if (section == "dyfrag") {
            if (k == "f_min") sc.dyfrag.f_min = positive(key, value);
            else if (k == "f_max") sc.dyfrag.f_max = positive(key, value);
            else if (k == "t_assess_ms") sc.dyfrag.t_assess = SimTime::from_seconds(number<double>(key, value) / 1e3);
            else unknown(section, k);
        } else if (section == "idsme") {
            IdsmeConfig& d = sc.idsme;
            if (k == "slot_us") d.slot = micros(key, value);
            else if (k == "total_slots") d.total_slots = positive(key, value);
            else if (k == "cap_init") d.cap_init = positive(key, value);
            else if (k == "cap_min") d.cap_min = positive(key, value);
            else if (k == "cap_max") d.cap_max = positive(key, value);
            else if (k == "channels") d.channels = positive(key, value);
            else if (k == "cw_urgent") d.cw_urgent = positive(key, value);
            else if (k == "cw_normal") d.cw_normal = positive(key, value);
            else if (k == "max_cap_retries") d.max_cap_retries = non_negative(key, value);
            else if (k == "max_retries") d.max_retries = non_negative(key, value);
            else if (k == "collision_threshold") d.collision_threshold = positive(key, value);
            else unknown(section, k);
        } else {
            fail("key '" + k + "' outside a known section");
        }
    }

    [[noreturn]] void unknown(const std::string& section, const std::string& key) const {
        fail("unknown key '" + key + "' in [" + section + "]");
    }
};

}  // namespace

Scenario parse_scenario(std::string_view text) {
    static const std::vector<std::string> kSections = {"scenario", "radio", "topology", "traffic",
                                                       "mac",      "dyfrag", "idsme"};
    Parser p;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++p.line;
        std::string_view ln = raw;
        if (const auto hash = ln.find('#'); hash != std::string_view::npos) ln = ln.substr(0, hash);
        ln = trim(ln);
        if (ln.empty()) continue;
        if (ln.front() == '[') {
            if (ln.back() != ']') p.fail("unterminated section header");
            section = std::string(trim(ln.substr(1, ln.size() - 2)));
            if (std::find(kSections.begin(), kSections.end(), section) == kSections.end()) {
                p.fail("unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = ln.find('=');
        if (eq == std::string_view::npos) p.fail("expected key = value");
        const std::string_view key = trim(ln.substr(0, eq));
        const std::string_view value = trim(ln.substr(eq + 1));
        if (key.empty()) p.fail("missing key");
        if (value.empty()) p.fail("missing value for '" + std::string(key) + "'");
        p.apply(section, key, value);
        p.key_line[section + "." + std::string(key)] = p.line;
    }
    if (!p.have_protocol) throw ConfigError("missing required key 'protocol' in [scenario]");
    if (p.sc.protocol == Protocol::DyFrag) {
        // Point cross-field errors at whichever bound was written last.
        p.line = std::max(p.key_line["dyfrag.f_min"], p.key_line["dyfrag.f_max"]);
        try {
            p.sc.dyfrag.validate();
        } catch (const ConfigError& e) {
            p.fail(e.what());
        }
    }
    try {
        p.sc.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("invalid scenario: ") + e.what());
    }
    return p.sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace dyfrag
