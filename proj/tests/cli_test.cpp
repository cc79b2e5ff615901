#include "cgolab_cli/commands.hpp"
#include "cgolab_cli/output.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cgolab;
using namespace cgolab::cli;
namespace fs = std::filesystem;

namespace {

const char* kDecay = "command=decay-scan\ngrid.n=64\ngrid.L=4\nxi.s=8,16,32\npotential=gaussian(0,0.2,1)\n";

std::vector<ConfigError> errors_of(const std::string& text, const std::string& base = ".")
{
    try {
        parse_config(text, base);
    } catch (const ConfigErrors& e) {
        return e.errors();
    }
    return {};
}

bool mentions(const std::vector<ConfigError>& errs, int line, const std::string& needle)
{
    for (const auto& e : errs)
        if (e.line == line && e.message.find(needle) != std::string::npos) return true;
    return false;
}

fs::path scratch_dir(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("cgolab_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Config, MissingCommand)
{
    auto errs = errors_of("grid.n=64\ngrid.L=4\n");
    ASSERT_FALSE(errs.empty());
    EXPECT_TRUE(mentions(errs, 0, "missing command"));
    EXPECT_TRUE(mentions(errors_of(""), 0, "missing command"));
}

TEST(Config, DecayScanRoundTripsByteIdentically)
{
    ExperimentConfig c = parse_config(kDecay);
    std::string once = c.serialize();
    EXPECT_EQ(once, "command=decay-scan\ngrid.L=4\ngrid.n=64\npotential=gaussian(0,0.2,1)\nxi.s=8,16,32\n");
    EXPECT_EQ(parse_config(once).serialize(), once);
    EXPECT_EQ(c.grid(), GridSpec(3, 64, 4.0));
    EXPECT_EQ(c.get_list("xi.s"), (std::vector<double>{8, 16, 32}));
}

TEST(Config, CanonicalNumbersRoundTrip)
{
    ExperimentConfig c = parse_config("command=decay-scan\ngrid.n=64\ngrid.L=4.000\nxi.s=8.0, 1e1\npotential=gaussian(0:0:0.10,0.2,1)\n");
    std::string s = c.serialize();
    EXPECT_NE(s.find("grid.L=4\n"), std::string::npos);
    EXPECT_NE(s.find("xi.s=8,10\n"), std::string::npos);
    EXPECT_EQ(parse_config(s).serialize(), s);
}

TEST(Config, CollectsEveryErrorWithItsLine)
{
    auto errs = errors_of("command=decay-scan\ngrid.n=6x4\nbogus=1\ngrid.L=4\ngrid.L=5\nno equals sign\n");
    EXPECT_TRUE(mentions(errs, 2, "grid.n"));
    EXPECT_TRUE(mentions(errs, 3, "unknown key 'bogus'"));
    EXPECT_TRUE(mentions(errs, 5, "duplicate key"));
    EXPECT_TRUE(mentions(errs, 6, "key=value"));
    EXPECT_GE(errs.size(), 4u);
}

TEST(Config, RequiredKeysAndRanges)
{
    EXPECT_TRUE(mentions(errors_of("command=decay-scan\ngrid.n=64\ngrid.L=4\n"), 0, "xi.s"));
    EXPECT_TRUE(mentions(errors_of("command=decay-scan\ngrid.n=48\ngrid.L=4\nxi.s=8\npotential=const(1)\n"), 0, "power of two"));
    EXPECT_FALSE(errors_of("command=decay-scan\nborn.tol=-1\n").empty());
    EXPECT_FALSE(errors_of("command=decay-scan\ngrid.n=64\ngrid.L=4\nxi.s=\npotential=const(1)\n").empty());
}

TEST(Config, CommandHintMustAgree)
{
    EXPECT_EQ(parse_config("grid.n=32\ngrid.L=4\nxi.s=8\n", ".", "multiplier-check").command, "multiplier-check");
    EXPECT_THROW(parse_config(kDecay, ".", "born-solve"), ConfigErrors);
}

TEST(Config, MissingFileIsReported)
{
    auto errs = errors_of("command=decay-scan\nxi.s=8\npotential=file(no_such_field.bin)\n");
    EXPECT_TRUE(mentions(errs, 3, "no_such_field.bin"));
}

TEST(Config, WrongHeaderNamesTheField)
{
    fs::path dir = scratch_dir("header");
    GridField f(GridSpec(3, 8, 2.0));
    save_field((dir / "q.bin").string(), f);
    {
        std::fstream io(dir / "q.bin", std::ios::in | std::ios::out | std::ios::binary);
        std::int32_t bad = 7;
        io.write(reinterpret_cast<const char*>(&bad), sizeof bad);
    }
    auto errs = errors_of("command=decay-scan\nxi.s=8\npotential=file(q.bin)\n", dir.string());
    ASSERT_FALSE(errs.empty());
    EXPECT_TRUE(mentions(errs, 3, "dim"));
    // a good file supplies the grid
    save_field((dir / "ok.bin").string(), f);
    ExperimentConfig c = parse_config("command=decay-scan\nxi.s=8\npotential=file(ok.bin)\n", dir.string());
    EXPECT_EQ(c.grid(), GridSpec(3, 8, 2.0));
}

TEST(Recipe, TermsEvaluateToTheirFormulas)
{
    Recipe r = parse_recipe("gaussian(0.1:0:0,0.2,2) + const(0.5) + linear(1:2:3)");
    Vec3 x{0.3, -0.1, 0.2};
    double g = 2 * std::exp(-(0.04 + 0.01 + 0.04) / (2 * 0.04));
    EXPECT_NEAR(r.evaluate(x), g + 0.5 + (0.3 - 0.2 + 0.6), 1e-14);
    EXPECT_EQ(parse_recipe(r.str()).str(), r.str());
    EXPECT_FALSE(r.grid_only());
    EXPECT_TRUE(parse_recipe("noise(1,3)").grid_only());
    EXPECT_THROW(parse_recipe("gaussian(0,0.2)"), Error);
    EXPECT_THROW(parse_recipe("sinc(1)"), Error);
}

TEST(Recipe, GridFieldVanishesOutsideTheSupport)
{
    GridSpec g(3, 16, 2.0);
    GridField f = parse_recipe("const(1)+noise(0.1,4)").to_grid(g, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (norm(g.point(i)) >= 1.0) EXPECT_EQ(f.values[i], cplx(0.0));
    EXPECT_TRUE(supported_in_ball(f, 1.0));
}

TEST(Output, CsvQuotingAndLineEnds)
{
    Csv csv({"a", "b"});
    csv.cell("x,y").cell("say \"hi\"");
    csv.end_row();
    csv.cell(0.1).cell(true);
    csv.end_row();
    EXPECT_EQ(csv.str(), "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n0.10000000000000001,true\r\n");
    EXPECT_THROW(csv.cell(1).end_row(), Error);
    EXPECT_EQ(std::stod(num(0.1)), 0.1);
    EXPECT_EQ(num(std::nan("")), "nan");
}

TEST(Run, MultiplierCheckRegularizesTheZeroMode)
{
    RunReport rep = run(parse_config("command=multiplier-check\ngrid.n=32\ngrid.L=4\nxi.s=4,16\nmultiplier.samples=20\n"));
    ASSERT_EQ(rep.files.size(), 1u);
    std::istringstream csv(rep.files[0].content);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "s,xi_abs,count_regularized,min_abs_denominator,delta_floor,max_rel_error\r");
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 6u);
        EXPECT_GE(std::stoi(cells[2]), 1);
    }
    EXPECT_TRUE(rep.passed());
}

TEST(Run, SameConfigAndSeedGiveIdenticalBytes)
{
    std::string text = "command=avg-estimate\navg.R=16\navg.k=4,64\navg.p=1.5\navg.samples=2000\nseed=9\n";
    fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
    write_outputs(run(parse_config(text)), a.string());
    write_outputs(run(parse_config(text)), b.string());
    EXPECT_EQ(slurp(a / "avg-estimate.csv"), slurp(b / "avg-estimate.csv"));
    RunReport other = run(parse_config("command=avg-estimate\navg.R=16\navg.k=4,64\navg.p=1.5\navg.samples=2000\nseed=10\n"));
    EXPECT_NE(other.files[0].content, slurp(a / "avg-estimate.csv"));

    std::string decay = "command=decay-scan\ngrid.n=32\ngrid.L=4\nxi.s=8,16\npotential=gaussian(0,0.2,1)+noise(0.01,5)\n";
    EXPECT_EQ(run(parse_config(decay)).files[0].content, run(parse_config(decay)).files[0].content);
}

TEST(Run, ReportEchoesConfigAndKeepsKeyOrder)
{
    RunReport rep = run(parse_config("command=shell-select\nshell.a=0.5,0.25,0.125,0.0625\n"));
    Json j = rep.to_json();
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"command", "config", "summary", "outputs", "checks", "passed", "tolerances",
                                              "wall_seconds"}));
    EXPECT_EQ(j["config"], "command=shell-select\nshell.a=0.5,0.25,0.125,0.0625\n");
    EXPECT_EQ(parse_config(j["config"].get<std::string>()).serialize(), j["config"].get<std::string>());
    EXPECT_EQ(j["summary"]["selected"], Json::array({1, 4}));
}

TEST(Run, ModuleErrorsCarryTheCommand)
{
    try {
        run(parse_config("command=dtn-assemble\ndtn.m=4\ndtn.kind=schrodinger\ndtn.coefficient=noise(1,2)\n"));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("dtn-assemble"), std::string::npos);
    }
}

TEST(Run, DryRunPlanListsRows)
{
    std::string p = plan(parse_config(kDecay));
    EXPECT_NE(p.find("rows: 3 values of s"), std::string::npos);
    EXPECT_NE(p.find("grid: dim 3, n 64, L 4"), std::string::npos);
}
