#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dyfrag/exp/experiment.hpp"

namespace {

using namespace dyfrag;

std::vector<std::uint64_t> to_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    for (long long v : parse_int_list(text)) {
        if (v < 0) throw ConfigError("seeds must be >= 0");
        seeds.push_back(static_cast<std::uint64_t>(v));
    }
    return seeds;
}

std::vector<int> to_ints(const std::string& text, int min_value, const char* what) {
    std::vector<int> out;
    for (long long v : parse_int_list(text)) {
        if (v < min_value) throw ConfigError(std::string(what) + " must be >= " + std::to_string(min_value));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::vector<Protocol> to_protocols(const std::string& text) {
    std::vector<Protocol> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto p = parse_protocol(item);
        if (!p) throw ConfigError("unknown protocol '" + item + "'");
        out.push_back(*p);
    }
    if (out.empty()) throw ConfigError("no protocols given");
    return out;
}

int emit(const std::vector<ResultRow>& rows, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        write_csv(std::cout, rows);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "error: cannot write " << out_path << '\n';
            return 1;
        }
        write_csv(out, rows);
    }
    bool failed = false;
    for (const auto& r : rows) failed = failed || !r.error.empty();
    return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator for priority-aware wireless MAC protocols"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string seeds_text;
    std::string out_path;
    bool verify = false;

    auto* run = app.add_subcommand("run", "Run one scenario file for a list of seeds");
    run->add_option("--scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
    run->add_option("--seeds", seeds_text, "Seed list, e.g. 1..10 or 1,4,7 (default: the file's seed)");
    run->add_option("--out", out_path, "CSV output path (default: stdout)");
    run->add_flag("--verify-determinism", verify, "Run each seed twice and compare rows");

    std::string protocols_text = "FROG,DYFRAG,IDSME";
    std::string nodes_text = "1..10";
    std::string frag_text = "16,2";
    int threads = 1;
    auto* sw = app.add_subcommand("sweep", "Cross-product sweep over protocols, node counts, fragment sizes and seeds");
    sw->add_option("--scenario", scenario_path, "Base scenario file (protocol and sources are overridden)")
        ->check(CLI::ExistingFile);
    sw->add_option("--protocols", protocols_text, "Comma-separated protocols")->capture_default_str();
    sw->add_option("--nodes", nodes_text, "Source counts")->capture_default_str();
    sw->add_option("--frag", frag_text, "FROG fragment sizes")->capture_default_str();
    sw->add_option("--seeds", seeds_text, "Seed list")->required();
    sw->add_option("--out", out_path, "CSV output path (default: stdout)");
    sw->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sw->add_flag("--verify-determinism", verify, "Run each cell twice and compare digests and rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const Scenario sc = load_scenario(scenario_path);
            const auto seeds = seeds_text.empty() ? std::vector<std::uint64_t>{sc.seed} : to_seeds(seeds_text);
            if (seeds.empty()) throw ConfigError("empty seed list");
            std::vector<ResultRow> rows;
            for (auto seed : seeds) {
                Scenario s = sc;
                s.seed = seed;
                const std::string id = scenario_id(s.protocol, s.sources, s.frog.fragment_size);
                auto part = rows_for(s, run_scenario(s), id);
                if (verify && rows_for(s, run_scenario(s), id) != part) {
                    for (auto& r : part) r.error = "nondeterministic: second run differs";
                }
                rows.insert(rows.end(), part.begin(), part.end());
            }
            return emit(rows, out_path);
        }

        Scenario base;
        if (!scenario_path.empty()) base = load_scenario(scenario_path);
        SweepAxes axes;
        axes.protocols = to_protocols(protocols_text);
        axes.node_counts = to_ints(nodes_text, 1, "node counts");
        axes.fragment_sizes = to_ints(frag_text, 1, "fragment sizes");
        axes.seeds = to_seeds(seeds_text);
        return emit(sweep(base, axes, {threads, verify}), out_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
