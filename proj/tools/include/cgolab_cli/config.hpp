#pragma once

#include "cgolab/grid.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cgolab::cli {

// Analytic potential recipes: a '+'-separated sum of terms
//   gaussian(c, width, amp)   amp e^{-|x-c|^2 / 2 width^2}
//   bump(c, radius, amp)      amp times a C^infinity window of the given radius around c
//   power(a, r0[, amp])       amp max(|x|, r0)^{-a}
//   linear(v)                 v.x
//   const(c)
//   noise(amp, seed)          white noise on the grid nodes (grid only)
//   file(path)                field file; must match the grid (grid only)
// Vectors are written a:b:c; a scalar c means (c, c, c).
struct Term {
    std::string kind;
    Vec3 center{};
    std::vector<double> args;
    std::string path;
};

struct Recipe {
    std::vector<Term> terms;

    bool grid_only() const;
    double evaluate(const Vec3& x) const;
    // Analytic terms are multiplied by a C^infinity window that is 1 inside 0.7 support
    // and 0 outside support; file terms are used as stored.
    GridField to_grid(const GridSpec& spec, double support) const;
    std::string str() const;
};

Recipe parse_recipe(const std::string& text);

struct ConfigError {
    int line = 0;  // 0 for whole-file errors
    std::string message;
    std::string str() const;
};

class ConfigErrors : public Error {
public:
    explicit ConfigErrors(std::vector<ConfigError> errors);
    const std::vector<ConfigError>& errors() const { return errors_; }

private:
    std::vector<ConfigError> errors_;
};

const std::vector<std::string>& command_names();

class ExperimentConfig {
public:
    std::string command;

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    // Canonical text of a value.
    const std::string& raw(const std::string& key) const;
    void set(const std::string& key, const std::string& value);  // validates; throws ConfigErrors

    std::int64_t get_int(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) const;
    std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
    double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
    std::vector<double> get_list(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const;
    Vec3 get_vec3(const std::string& key, std::optional<Vec3> fallback = std::nullopt) const;
    std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
    Recipe get_recipe(const std::string& key) const;

    GridSpec grid() const;
    std::uint64_t seed() const { return get_u64("seed", 1); }

    // command line first, then keys in sorted order; parse(serialize()) reproduces it.
    std::string serialize() const;
    const std::map<std::string, std::string>& values() const { return values_; }

private:
    friend ExperimentConfig parse_config(const std::string& text, const std::string& base_dir,
                                         const std::string& command_hint);
    std::map<std::string, std::string> values_;
};

// Collects every error before throwing ConfigErrors. Relative file paths are resolved
// against base_dir. command_hint supplies the command when the text has none and must
// agree with it otherwise.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".",
                              const std::string& command_hint = "");
ExperimentConfig load_config(const std::string& path, const std::string& command_hint = "");

// Keys each command needs; checked by parse_config and by run().
std::vector<std::string> required_keys(const std::string& command);
std::vector<ConfigError> check_required(const ExperimentConfig& c);

}  // namespace cgolab::cli
