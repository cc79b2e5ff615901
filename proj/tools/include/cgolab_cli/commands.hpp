#pragma once

#include "cgolab_cli/config.hpp"

#include <json.hpp>

#include <functional>
#include <ostream>

namespace cgolab::cli {

using Json = nlohmann::ordered_json;

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct OutputFile {
    std::string name;  // relative to the output directory
    std::string content;
};

struct RunReport {
    std::string command;
    std::string config;  // serialized, canonical
    Json summary = Json::object();
    std::vector<OutputFile> files;
    std::vector<Check> checks;
    Json tolerances = Json::object();
    double wall_seconds = 0;

    bool passed() const;
    Json to_json() const;
};

// Human-readable execution plan for --dry-run.
std::string plan(const ExperimentConfig& config);

// Dispatches to the owning module. Nothing is written; see write_outputs.
RunReport run(const ExperimentConfig& config, std::ostream* log = nullptr);

// Writes every output file plus report.json into dir (created if needed).
void write_outputs(const RunReport& report, const std::string& dir);

}  // namespace cgolab::cli
