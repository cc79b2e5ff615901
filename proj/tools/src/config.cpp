#include "cgolab_cli/config.hpp"

#include "cgolab/cgo.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace cgolab::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_top(const std::string& s, char sep)
{
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::optional<double> to_double(const std::string& t)
{
    double v = 0;
    const char* b = t.data();
    const char* e = b + t.size();
    if (b != e && *b == '+') ++b;
    auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc() || r.ptr != e || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> to_int(const std::string& t)
{
    std::int64_t v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> to_u64(const std::string& t)
{
    std::uint64_t v = 0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
    return v;
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v)
{
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt_vec(const Vec3& v)
{
    if (v[0] == v[1] && v[1] == v[2]) return fmt_double(v[0]);
    return fmt_double(v[0]) + ":" + fmt_double(v[1]) + ":" + fmt_double(v[2]);
}

Vec3 parse_vec(const std::string& t)
{
    auto parts = split_top(t, ':');
    if (parts.size() == 1) {
        auto v = to_double(parts[0]);
        if (!v) throw Error("malformed number '" + parts[0] + "'");
        return {*v, *v, *v};
    }
    if (parts.size() != 3) throw Error("vector '" + t + "' needs 1 or 3 components");
    Vec3 out{};
    for (int i = 0; i < 3; ++i) {
        auto v = to_double(parts[i]);
        if (!v) throw Error("malformed number '" + parts[i] + "'");
        out[i] = *v;
    }
    return out;
}

enum class Kind { Int, U64, Double, List, Vec, Choice, RecipeT, Text };

struct KeySpec {
    Kind kind;
    std::vector<std::string> choices{};
    bool positive = false;
};

const std::map<std::string, KeySpec>& schema()
{
    static const std::map<std::string, KeySpec> s = {
        {"seed", {Kind::U64}},
        {"out", {Kind::Text}},
        {"grid.dim", {Kind::Int}},
        {"grid.n", {Kind::Int}},
        {"grid.L", {Kind::Double, {}, true}},
        {"xi.s", {Kind::List}},
        {"xi.variant", {Kind::Choice, {"xi1", "xi2"}}},
        {"frame.sigma1", {Kind::Vec}},
        {"frame.sigma2", {Kind::Vec}},
        {"frame.sigma3", {Kind::Vec}},
        {"potential", {Kind::RecipeT}},
        {"potential2", {Kind::RecipeT}},
        {"potential.support", {Kind::Double, {}, true}},
        {"weight", {Kind::RecipeT}},
        {"case", {Kind::Choice, {"SU1", "SU2_1", "SU2", "SU3", "LEM1", "LEM2", "KRS", "LEMNEW"}}},
        {"case.k", {Kind::Int}},
        {"case.r", {Kind::Double, {}, true}},
        {"born.tol", {Kind::Double, {}, true}},
        {"born.max_iter", {Kind::Int}},
        {"scan.norm", {Kind::Choice, {"h1", "lcritical"}}},
        {"multiplier.samples", {Kind::Int}},
        {"multiplier.tol", {Kind::Double, {}, true}},
        {"avg.R", {Kind::List}},
        {"avg.k", {Kind::List}},
        {"avg.p", {Kind::List}},
        {"avg.samples", {Kind::Int}},
        {"energy.R", {Kind::List}},
        {"energy.frames", {Kind::Int}},
        {"energy.mid_samples", {Kind::Int}},
        {"energy.near_samples", {Kind::Int}},
        {"shell.a", {Kind::List}},
        {"dtn.dim", {Kind::Int}},
        {"dtn.m", {Kind::Int}},
        {"dtn.kind", {Kind::Choice, {"schrodinger", "conductivity"}}},
        {"dtn.scheme", {Kind::Choice, {"one-sided", "variational"}}},
        {"dtn.coefficient", {Kind::RecipeT}},
        {"probe.gamma1", {Kind::RecipeT}},
        {"probe.gamma2", {Kind::RecipeT}},
        {"probe.face", {Kind::Int}},
        {"probe.a", {Kind::Int}},
        {"probe.b", {Kind::Int}},
        {"probe.steps", {Kind::Int}},
        {"uniqueness.theorem", {Kind::Choice, {"t1", "t2", "t3"}}},
        {"uniqueness.directions", {Kind::Int}},
        {"uniqueness.epsilon", {Kind::Double, {}, true}},
    };
    return s;
}

void check_field_file(const std::string& path)
{
    if (!fs::exists(path)) throw Error("potential file '" + path + "' does not exist");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("potential file '" + path + "' cannot be opened");
    try {
        read_field_header(in);
    } catch (const Error& e) {
        throw Error("potential file '" + path + "': " + e.what());
    }
}

// Canonical form of a value; throws Error with a message naming the problem.
std::string canonical(const std::string& key, const std::string& value, const std::string& base_dir)
{
    const KeySpec& ks = schema().at(key);
    auto number = [&](const std::string& t) {
        auto v = to_double(t);
        if (!v) throw Error("malformed number '" + t + "' for " + key);
        if (ks.positive && !(*v > 0)) throw Error(key + " must be positive");
        return *v;
    };
    switch (ks.kind) {
    case Kind::Int: {
        auto v = to_int(value);
        if (!v) throw Error("malformed number '" + value + "' for " + key);
        return std::to_string(*v);
    }
    case Kind::U64: {
        auto v = to_u64(value);
        if (!v) throw Error("malformed number '" + value + "' for " + key);
        return std::to_string(*v);
    }
    case Kind::Double: return fmt_double(number(value));
    case Kind::List: {
        std::string out;
        for (const auto& t : split_top(value, ',')) out += (out.empty() ? "" : ",") + fmt_double(number(t));
        return out;
    }
    case Kind::Vec: {
        auto parts = split_top(value, ',');
        if (parts.size() != 3) throw Error(key + " needs three comma-separated components");
        std::string out;
        for (const auto& t : parts) out += (out.empty() ? "" : ",") + fmt_double(number(t));
        return out;
    }
    case Kind::Choice:
        if (std::find(ks.choices.begin(), ks.choices.end(), value) == ks.choices.end()) {
            std::string opts;
            for (const auto& c : ks.choices) opts += (opts.empty() ? "" : "|") + c;
            throw Error("invalid value '" + value + "' for " + key + " (expected " + opts + ")");
        }
        return value;
    case Kind::RecipeT: {
        Recipe r = parse_recipe(value);
        for (auto& t : r.terms)
            if (t.kind == "file") {
                fs::path p(t.path);
                if (p.is_relative()) t.path = (fs::path(base_dir) / p).lexically_normal().string();
                check_field_file(t.path);
            }
        return r.str();
    }
    case Kind::Text:
        if (value.empty()) throw Error(key + " is empty");
        return value;
    }
    return value;
}

}  // namespace

std::string ConfigError::str() const { return line > 0 ? "line " + std::to_string(line) + ": " + message : message; }

ConfigErrors::ConfigErrors(std::vector<ConfigError> errors)
    : Error([&] {
          std::string s;
          for (const auto& e : errors) s += (s.empty() ? "" : "\n") + e.str();
          return s;
      }()),
      errors_(std::move(errors))
{
}

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names = {"multiplier-check", "decay-scan",     "born-solve",
                                                   "ratio-scan",       "avg-estimate",   "shell-select",
                                                   "energy",           "dtn-assemble",   "boundary-probe",
                                                   "uniqueness-run",   "accept"};
    return names;
}

Recipe parse_recipe(const std::string& text)
{
    std::string compact;
    for (char c : text)
        if (c != ' ' && c != '\t') compact += c;
    if (compact.empty()) throw Error("empty potential recipe");
    Recipe r;
    for (const auto& part : split_top(compact, '+')) {
        auto open = part.find('(');
        if (open == std::string::npos || part.back() != ')') throw Error("malformed recipe term '" + part + "'");
        Term t;
        t.kind = part.substr(0, open);
        std::string inner = part.substr(open + 1, part.size() - open - 2);
        auto args = split_top(inner, ',');
        auto num = [&](const std::string& a) {
            auto v = to_double(a);
            if (!v) throw Error("malformed number '" + a + "' in " + t.kind + "()");
            return *v;
        };
        auto arity = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi)
                throw Error(t.kind + "() takes " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                            " arguments");
        };
        if (t.kind == "gaussian" || t.kind == "bump") {
            arity(3, 3);
            t.center = parse_vec(args[0]);
            t.args = {num(args[1]), num(args[2])};
            if (!(t.args[0] > 0)) throw Error(t.kind + "() width must be positive");
        } else if (t.kind == "power") {
            arity(2, 3);
            t.args = {num(args[0]), num(args[1]), args.size() == 3 ? num(args[2]) : 1.0};
            if (!(t.args[1] > 0)) throw Error("power() r0 must be positive");
        } else if (t.kind == "linear") {
            arity(1, 1);
            t.center = parse_vec(args[0]);
        } else if (t.kind == "const") {
            arity(1, 1);
            t.args = {num(args[0])};
        } else if (t.kind == "noise") {
            arity(2, 2);
            t.args = {num(args[0]), num(args[1])};
            if (t.args[1] < 0 || t.args[1] != std::floor(t.args[1])) throw Error("noise() seed must be a whole number");
        } else if (t.kind == "file") {
            arity(1, 1);
            if (args[0].empty()) throw Error("file() needs a path");
            t.path = args[0];
        } else {
            throw Error("unknown recipe term '" + t.kind + "'");
        }
        r.terms.push_back(std::move(t));
    }
    return r;
}

bool Recipe::grid_only() const
{
    return std::any_of(terms.begin(), terms.end(), [](const Term& t) { return t.kind == "noise" || t.kind == "file"; });
}

double Recipe::evaluate(const Vec3& x) const
{
    double v = 0;
    for (const auto& t : terms) {
        if (t.kind == "gaussian") {
            Vec3 d = x - t.center;
            v += t.args[1] * std::exp(-dot(d, d) / (2 * t.args[0] * t.args[0]));
        } else if (t.kind == "bump") {
            v += t.args[1] * smooth_window(norm(x - t.center), 0.0, t.args[0]);
        } else if (t.kind == "power") {
            v += t.args[2] * std::pow(std::max(norm(x), t.args[1]), -t.args[0]);
        } else if (t.kind == "linear") {
            v += dot(t.center, x);
        } else if (t.kind == "const") {
            v += t.args[0];
        } else {
            throw Error("recipe term " + t.kind + "() needs a grid");
        }
    }
    return v;
}

GridField Recipe::to_grid(const GridSpec& spec, double support) const
{
    GridField out(spec);
    for (const auto& t : terms) {
        if (t.kind == "file") {
            GridField f = load_field(t.path);
            if (f.spec != spec) throw Error("field file '" + t.path + "' does not match the grid");
            out += f;
        } else if (t.kind == "noise") {
            std::mt19937_64 rng(static_cast<std::uint64_t>(t.args[1]));
            std::normal_distribution<double> N;
            for (std::size_t i = 0; i < spec.size(); ++i) {
                double g = N(rng);
                out.values[i] += t.args[0] * g * smooth_window(norm(spec.point(i)), 0.7 * support, support);
            }
        } else {
            Recipe one;
            one.terms = {t};
            for (std::size_t i = 0; i < spec.size(); ++i) {
                Vec3 x = spec.point(i);
                double w = smooth_window(norm(x), 0.7 * support, support);
                if (w > 0) out.values[i] += one.evaluate(x) * w;
            }
        }
    }
    return out;
}

std::string Recipe::str() const
{
    std::string s;
    for (const auto& t : terms) {
        if (!s.empty()) s += "+";
        s += t.kind + "(";
        if (t.kind == "gaussian" || t.kind == "bump")
            s += fmt_vec(t.center) + "," + fmt_double(t.args[0]) + "," + fmt_double(t.args[1]);
        else if (t.kind == "power")
            s += fmt_double(t.args[0]) + "," + fmt_double(t.args[1]) + (t.args[2] != 1 ? "," + fmt_double(t.args[2]) : "");
        else if (t.kind == "linear")
            s += fmt_vec(t.center);
        else if (t.kind == "const")
            s += fmt_double(t.args[0]);
        else if (t.kind == "noise")
            s += fmt_double(t.args[0]) + "," + fmt_double(t.args[1]);
        else
            s += t.path;
        s += ")";
    }
    return s;
}

const std::string& ExperimentConfig::raw(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) throw Error("config: missing key " + key);
    return it->second;
}

void ExperimentConfig::set(const std::string& key, const std::string& value)
{
    if (key == "command") {
        auto& names = command_names();
        if (std::find(names.begin(), names.end(), value) == names.end())
            throw ConfigErrors({{0, "unknown command '" + value + "'"}});
        command = value;
        return;
    }
    if (!schema().count(key)) throw ConfigErrors({{0, "unknown key '" + key + "'"}});
    try {
        values_[key] = canonical(key, trim(value), ".");
    } catch (const ConfigErrors&) {
        throw;
    } catch (const Error& e) {
        throw ConfigErrors({{0, e.what()}});
    }
}

std::int64_t ExperimentConfig::get_int(const std::string& key, std::optional<std::int64_t> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    return *to_int(raw(key));
}

std::uint64_t ExperimentConfig::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    return *to_u64(raw(key));
}

double ExperimentConfig::get_double(const std::string& key, std::optional<double> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    return *to_double(raw(key));
}

std::vector<double> ExperimentConfig::get_list(const std::string& key, std::optional<std::vector<double>> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    std::vector<double> out;
    for (const auto& t : split_top(raw(key), ',')) out.push_back(*to_double(t));
    return out;
}

Vec3 ExperimentConfig::get_vec3(const std::string& key, std::optional<Vec3> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    auto v = get_list(key);
    return {v[0], v[1], v[2]};
}

std::string ExperimentConfig::get_string(const std::string& key, std::optional<std::string> fallback) const
{
    if (!has(key)) {
        if (fallback) return *fallback;
        raw(key);
    }
    return raw(key);
}

Recipe ExperimentConfig::get_recipe(const std::string& key) const { return parse_recipe(raw(key)); }

GridSpec ExperimentConfig::grid() const
{
    if (has("grid.n") || has("grid.L"))
        return GridSpec(static_cast<int>(get_int("grid.dim", 3)), static_cast<int>(get_int("grid.n")), get_double("grid.L"));
    for (const char* key : {"potential", "potential2"}) {
        if (!has(key)) continue;
        for (const auto& t : get_recipe(key).terms)
            if (t.kind == "file") {
                std::ifstream in(t.path, std::ios::binary);
                FieldHeader h = read_field_header(in);
                return GridSpec(h.dim, h.n, h.L);
            }
    }
    throw Error("config: grid.n and grid.L are required (or a file() potential)");
}

std::string ExperimentConfig::serialize() const
{
    std::string s = "command=" + command + "\n";
    for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
    return s;
}

std::vector<std::string> required_keys(const std::string& command)
{
    static const std::map<std::string, std::vector<std::string>> req = {
        {"multiplier-check", {"grid", "xi.s"}},
        {"decay-scan", {"grid", "xi.s", "potential"}},
        {"born-solve", {"grid", "xi.s", "potential"}},
        {"ratio-scan", {"grid", "xi.s", "case", "potential"}},
        {"avg-estimate", {"avg.R", "avg.k", "avg.p"}},
        {"shell-select", {}},
        {"energy", {"grid", "potential", "energy.R"}},
        {"dtn-assemble", {"dtn.m", "dtn.kind", "dtn.coefficient"}},
        {"boundary-probe", {"dtn.m", "probe.gamma1", "probe.gamma2"}},
        {"uniqueness-run", {"grid", "potential", "potential2", "uniqueness.theorem"}},
        {"accept", {}},
    };
    auto it = req.find(command);
    return it == req.end() ? std::vector<std::string>{} : it->second;
}

std::vector<ConfigError> check_required(const ExperimentConfig& c)
{
    std::vector<ConfigError> errs;
    if (c.command.empty()) {
        errs.push_back({0, "missing command"});
        return errs;
    }
    auto file_potential = [&] {
        if (!c.has("potential")) return false;
        for (const auto& t : c.get_recipe("potential").terms)
            if (t.kind == "file") return true;
        return false;
    };
    for (const auto& k : required_keys(c.command)) {
        if (k == "grid") {
            if (!file_potential())
                for (const char* g : {"grid.n", "grid.L"})
                    if (!c.has(g)) errs.push_back({0, std::string("missing key ") + g + " for " + c.command});
        } else if (!c.has(k)) {
            errs.push_back({0, "missing key " + k + " for " + c.command});
        }
    }
    if (c.command == "shell-select" && !c.has("shell.a") && !c.has("potential"))
        errs.push_back({0, "shell-select needs shell.a or a potential"});
    if (c.has("grid.n")) {
        auto n = c.get_int("grid.n");
        if (n < 8 || (n & (n - 1)) != 0) errs.push_back({0, "grid.n must be a power of two >= 8"});
    }
    if (c.has("grid.dim")) {
        auto d = c.get_int("grid.dim");
        if (d != 2 && d != 3) errs.push_back({0, "grid.dim must be 2 or 3"});
    }
    return errs;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir, const std::string& command_hint)
{
    ExperimentConfig c;
    std::vector<ConfigError> errs;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            errs.push_back({no, "expected key=value"});
            continue;
        }
        std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
        if (!seen.insert(key).second) {
            errs.push_back({no, "duplicate key '" + key + "'"});
            continue;
        }
        if (key == "command") {
            auto& names = command_names();
            if (std::find(names.begin(), names.end(), value) == names.end())
                errs.push_back({no, "unknown command '" + value + "'"});
            else if (!command_hint.empty() && value != command_hint)
                errs.push_back({no, "config is for '" + value + "', not '" + command_hint + "'"});
            else
                c.command = value;
            continue;
        }
        if (!schema().count(key)) {
            errs.push_back({no, "unknown key '" + key + "'"});
            continue;
        }
        try {
            c.values_[key] = canonical(key, value, base_dir);
        } catch (const Error& e) {
            errs.push_back({no, e.what()});
        }
    }
    if (!seen.count("command") && !command_hint.empty()) c.command = command_hint;
    if (errs.empty()) {
        auto more = check_required(c);
        errs.insert(errs.end(), more.begin(), more.end());
    } else if (c.command.empty() && !seen.count("command")) {
        errs.push_back({0, "missing command"});
    }
    if (!errs.empty()) throw ConfigErrors(std::move(errs));
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& command_hint)
{
    std::ifstream in(path);
    if (!in) throw ConfigErrors({{0, "cannot read config file '" + path + "'"}});
    std::stringstream ss;
    ss << in.rdbuf();
    std::string dir = fs::path(path).parent_path().string();
    return parse_config(ss.str(), dir.empty() ? "." : dir, command_hint);
}

}  // namespace cgolab::cli
