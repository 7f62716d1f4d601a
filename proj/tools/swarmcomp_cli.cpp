// swarmcomp command-line front end. Talks to the core only through the
// C shared-library API so the two stay exercised together.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swarmcomp.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kConfigSchemaVersion = 1;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const std::string& path, const std::string& text) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

std::string iso_now() {
    auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct ManifestBuilder {
    std::string command;
    json config = json::object();
    json seeds = json::object();
    std::string started_at = iso_now();
    std::vector<std::string> inputs;       // file contents folded into the hash
    std::vector<std::string> output_paths;

    void write(const std::string& path) {
        std::string hashed = config.dump();
        for (const auto& in : inputs) hashed += in;
        json m;
        m["schema_version"] = kConfigSchemaVersion;
        m["command"] = command;
        m["config"] = config;
        m["seeds"] = seeds;
        m["timestamps"] = {{"started", started_at}, {"finished", iso_now()}};
        m["content_hash"] = fnv1a_hex(hashed);
        m["output_paths"] = output_paths;
        spill(path, m.dump(2) + "\n");
    }
};

std::string join_argv(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i > 0) s += ' ';
        s += argv[i];
    }
    return s;
}

[[noreturn]] void throw_api_error(int code) {
    std::string msg = sc_last_error();
    if (code == 1) throw CLI::ValidationError(msg.empty() ? "invalid input" : msg);
    throw std::runtime_error(msg.empty() ? "runtime failure" : msg);
}

std::string call_api(int (*fn)(const char*, char**), const std::string& arg) {
    char* out = nullptr;
    int rc = fn(arg.c_str(), &out);
    if (rc != 0) throw_api_error(rc);
    std::string result(out != nullptr ? out : "");
    sc_string_free(out);
    return result;
}

std::string call_api2(int (*fn)(const char*, const char*, char**), const std::string& a,
                      const std::string& b) {
    char* out = nullptr;
    int rc = fn(a.c_str(), b.c_str(), &out);
    if (rc != 0) throw_api_error(rc);
    std::string result(out != nullptr ? out : "");
    sc_string_free(out);
    return result;
}

void deliver(const std::string& text, const std::string& out_path,
             ManifestBuilder& manifest) {
    std::string manifest_path;
    if (!out_path.empty()) {
        spill(out_path, text + "\n");
        manifest.output_paths.push_back(out_path);
        manifest_path = out_path + ".manifest.json";
    } else {
        std::cout << text << '\n';
        manifest_path = "manifest.json";
    }
    manifest.write(manifest_path);
}

// Applies flag > config file > default. `flags` holds only options the user set.
json merged_config(const json& defaults, const std::string& config_path, const json& flags,
                   ManifestBuilder& manifest) {
    json cfg = defaults;
    if (!config_path.empty()) {
        std::string text = slurp(config_path);
        manifest.inputs.push_back(text);
        cfg.merge_patch(json::parse(text));
    }
    cfg.merge_patch(flags);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"swarmcomp: multi-agent composition engine and analysis suite"};
    app.require_subcommand(1);
    ManifestBuilder manifest;
    manifest.command = join_argv(argc, argv);

    // ---- compose ----
    auto* compose = app.add_subcommand("compose", "Run a composition system");
    std::string c_system, c_policy, c_objective, c_objective_file, c_out, c_config;
    int c_bars = 0, c_iterations = 0, c_k = 0, c_radius = 0, c_peer = 0;
    std::uint64_t c_seed = 0;
    std::vector<std::string> c_voices;
    compose->add_option("--system", c_system, "critic|swarm|single")
        ->check(CLI::IsMember({"critic", "swarm", "single"}));
    compose->add_option("--bars", c_bars, "number of bars");
    compose->add_option("--voices", c_voices, "voice/instrument names");
    compose->add_option("--iterations", c_iterations, "iteration budget");
    auto* obj_opt = compose->add_option("--objective", c_objective, "global objective text");
    compose->add_option("--objective-file", c_objective_file, "file with objective text")
        ->excludes(obj_opt);
    compose->add_option("--policy", c_policy, "remote|stub")
        ->check(CLI::IsMember({"remote", "stub"}));
    compose->add_option("--seed", c_seed, "run seed");
    compose->add_option("--k", c_k, "context window (-1 = full draft)");
    compose->add_option("--radius", c_radius, "pheromone sensing radius");
    compose->add_option("--peer-range", c_peer, "peer assessment range");
    compose->add_option("--out", c_out, "output directory");
    compose->add_option("--config", c_config, "JSON config file (flags override it)");

    // ---- analyze ----
    auto* analyze = app.add_subcommand("analyze", "Analyze a composed piece");
    analyze->require_subcommand(1);
    std::string a_in, a_out, a_config;
    auto add_analyze_sub = [&](const char* name, const char* help) {
        auto* sub = analyze->add_subcommand(name, help);
        sub->add_option("--in", a_in, "piece JSON file")->required();
        sub->add_option("--out", a_out, "output JSON file (default stdout)");
        sub->add_option("--config", a_config, "JSON config file with analysis options");
        return sub;
    };
    auto* a_music = add_analyze_sub("musicology", "Creative/musicological metrics");
    auto* a_graph = add_analyze_sub("graph", "Structure graph and long-range metrics");
    auto* a_multi = add_analyze_sub("multiscale", "Multiscale filtration analysis");

    // ---- equilibrium ----
    auto* equi = app.add_subcommand("equilibrium", "Best-response fit on trait trajectories");
    std::string e_traits, e_out;
    equi->add_option("--traits", e_traits, "trajectory file (.csv or .json)")->required();
    equi->add_option("--out", e_out, "output JSON file (default stdout)");

    // ---- particles ----
    auto* part = app.add_subcommand("particles", "2-D particle/flocking experiment");
    std::string p_rule = "lj", p_out;
    int p_steps = 0;
    std::uint64_t p_seed = 42;
    part->add_option("--rule", p_rule, "lj|morse|salr|vicsek")
        ->check(CLI::IsMember({"lj", "morse", "salr", "vicsek"}));
    part->add_option("--steps", p_steps, "number of steps");
    part->add_option("--seed", p_seed, "run seed");
    part->add_option("--out", p_out, "output directory")->required();

    try {
        app.parse(argc, argv);

        if (compose->parsed()) {
            json defaults = {{"system", "swarm"},
                             {"n_bars", 8},
                             {"voices", json::array({"Piano"})},
                             {"iterations", 8},
                             {"context_window", -1},
                             {"sensing_radius", 2},
                             {"peer_range", 2},
                             {"seed", 0},
                             {"policy", {{"kind", "stub"}}}};
            json flags = json::object();
            if (compose->count("--system")) flags["system"] = c_system;
            if (compose->count("--bars")) flags["n_bars"] = c_bars;
            if (compose->count("--voices")) flags["voices"] = c_voices;
            if (compose->count("--iterations")) flags["iterations"] = c_iterations;
            if (compose->count("--objective")) flags["objective"] = c_objective;
            if (compose->count("--objective-file")) {
                std::string text = slurp(c_objective_file);
                manifest.inputs.push_back(text);
                flags["objective"] = text;
            }
            if (compose->count("--policy")) flags["policy"] = {{"kind", c_policy}};
            if (compose->count("--seed")) flags["seed"] = c_seed;
            if (compose->count("--k")) flags["context_window"] = c_k;
            if (compose->count("--radius")) flags["sensing_radius"] = c_radius;
            if (compose->count("--peer-range")) flags["peer_range"] = c_peer;
            if (compose->count("--out")) flags["out_dir"] = c_out;

            json cfg = merged_config(defaults, c_config, flags, manifest);
            manifest.config = cfg;
            manifest.seeds = {{"run_seed", cfg.value("seed", std::uint64_t{0})}};
            std::string result = call_api(sc_compose, cfg.dump());
            std::string out_dir = cfg.value("out_dir", std::string{});
            if (!out_dir.empty()) {
                spill(out_dir + "/result.json", result + "\n");
                manifest.output_paths.push_back(out_dir + "/result.json");
                manifest.output_paths.push_back(out_dir + "/best_composition.json");
                manifest.write(out_dir + "/manifest.json");
            } else {
                std::cout << result << '\n';
                manifest.write("manifest.json");
            }
            json rj = json::parse(result);
            if (rj.value("failed", false)) {
                std::cerr << "run failed: " << rj.value("failure_reason", "") << '\n';
                return 2;
            }
        } else if (analyze->parsed()) {
            std::string piece = slurp(a_in);
            manifest.inputs.push_back(piece);
            // Accept run artifacts that wrap the piece (e.g. best_composition.json).
            if (json pj = json::parse(piece, nullptr, false);
                pj.is_object() && pj.contains("piece"))
                piece = pj["piece"].dump();
            json options = merged_config(json::object(), a_config, json::object(), manifest);
            manifest.config = options;
            manifest.seeds = {{"seed", options.value("seed", std::uint64_t{0})}};
            std::string result;
            if (a_music->parsed())
                result = call_api(sc_analyze_musicology, piece);
            else if (a_graph->parsed())
                result = call_api2(sc_analyze_graph, piece, options.dump());
            else if (a_multi->parsed())
                result = call_api2(sc_analyze_multiscale, piece, options.dump());
            deliver(result, a_out, manifest);
        } else if (equi->parsed()) {
            std::string text = slurp(e_traits);
            manifest.inputs.push_back(text);
            std::string format = e_traits.size() >= 4 &&
                                         e_traits.compare(e_traits.size() - 4, 4, ".csv") == 0
                                     ? "csv"
                                     : "json";
            manifest.config = {{"traits", e_traits}, {"format", format}};
            std::string result = call_api2(sc_equilibrium, text, format);
            deliver(result, e_out, manifest);
        } else if (part->parsed()) {
            json cfg = {{"rule", p_rule}, {"seed", p_seed}, {"out_dir", p_out}};
            if (part->count("--steps")) cfg["steps"] = p_steps;
            manifest.config = cfg;
            manifest.seeds = {{"run_seed", p_seed}};
            std::string result = call_api(sc_particles, cfg.dump());
            spill(p_out + "/result.json", result + "\n");
            for (const char* f : {"result.json", "series.csv", "config.csv", "gr.csv",
                                  "params.json"})
                manifest.output_paths.push_back(p_out + "/" + f);
            manifest.write(p_out + "/manifest.json");
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
