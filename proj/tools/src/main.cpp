#include "cgolab_cli/acceptance.hpp"
#include "cgolab_cli/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace cgolab;
using namespace cgolab::cli;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool dry_run = false;
    std::vector<std::string> sets;
    std::string theorem, q1, q2;
    std::vector<int> only;
};

std::string key_of(const std::string& line)
{
    auto eq = line.find('=');
    std::string k = line.substr(0, eq);
    k.erase(0, k.find_first_not_of(" \t"));
    k.erase(k.find_last_not_of(" \t\r") + 1);
    return k;
}

// Command-line values replace the matching config lines; the replaced lines are
// blanked so error line numbers still refer to the file.
ExperimentConfig build_config(const std::string& command, const Options& o, CLI::App& sub)
{
    std::vector<std::string> extra = o.sets;
    if (sub.count("--seed")) extra.push_back("seed=" + std::to_string(o.seed));
    if (!o.out.empty()) extra.push_back("out=" + o.out);
    if (!o.theorem.empty()) extra.push_back("uniqueness.theorem=" + o.theorem);
    if (!o.q1.empty()) extra.push_back("potential=file(" + std::filesystem::absolute(o.q1).string() + ")");
    if (!o.q2.empty()) extra.push_back("potential2=file(" + std::filesystem::absolute(o.q2).string() + ")");
    std::set<std::string> overridden;
    for (const auto& e : extra) {
        if (e.find('=') == std::string::npos) throw ConfigErrors({{0, "--set expects key=value, got '" + e + "'"}});
        overridden.insert(key_of(e));
    }

    std::string text, base = ".";
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw ConfigErrors({{0, "cannot read config file '" + o.config + "'"}});
        std::string line;
        while (std::getline(in, line)) {
            auto t = line.find_first_not_of(" \t");
            bool is_kv = t != std::string::npos && line[t] != '#' && line.find('=') != std::string::npos;
            text += (is_kv && overridden.count(key_of(line)) ? std::string() : line) + "\n";
        }
        auto dir = std::filesystem::path(o.config).parent_path().string();
        if (!dir.empty()) base = dir;
    }
    for (const auto& e : extra) text += e + "\n";
    return parse_config(text, base, command);
}

int execute(const std::string& command, const Options& o, CLI::App& sub)
{
    ExperimentConfig config;
    try {
        config = build_config(command, o, sub);
    } catch (const ConfigErrors& e) {
        for (const auto& err : e.errors()) std::cerr << "config error: " << err.str() << "\n";
        return 2;
    }
    if (o.dry_run) {
        std::cout << plan(config);
        return 0;
    }
    if (command == "accept") {
        auto results = run_acceptance(o.only, &std::cout);
        int failed = 0;
        for (const auto& r : results) failed += !r.pass;
        std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
        return failed ? 1 : 0;
    }
    try {
        RunReport rep = run(config, &std::cout);
        std::string dir = config.get_string("out", "cgolab-out");
        write_outputs(rep, dir);
        for (const auto& c : rep.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
        std::cout << "wrote " << rep.files.size() + 1 << " files to " << dir << " (" << rep.wall_seconds << " s)\n";
        return rep.passed() ? 0 : 1;
    } catch (const ConfigErrors& e) {
        for (const auto& err : e.errors()) std::cerr << "config error: " << err.str() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cgolab: CGO solutions, estimates and uniqueness experiments"};
    app.require_subcommand(1);
    Options o;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", o.config, "key=value config file");
        sub->add_option("--seed", o.seed, "base seed (config key seed)");
        sub->add_option("--out", o.out, "output directory (config key out)");
        sub->add_flag("--dry-run", o.dry_run, "validate the config and print the plan");
        sub->add_option("--set", o.sets, "extra key=value, repeatable")->take_all();
        if (name == "uniqueness-run") {
            sub->add_option("--theorem", o.theorem, "t1, t2 or t3");
            sub->add_option("--q1", o.q1, "field file for q1");
            sub->add_option("--q2", o.q2, "field file for q2");
        }
        if (name == "accept") sub->add_option("--only", o.only, "criterion numbers to run");
        subs.emplace_back(name, sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    for (auto& [name, sub] : subs)
        if (sub->parsed()) return execute(name, o, *sub);
    return 2;
}
