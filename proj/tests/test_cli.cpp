#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "medtree/cli.hpp"

using namespace medtree;
namespace fs = std::filesystem;

namespace
{
fs::path scratch_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("medtree_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> data_lines(const fs::path& p)
{
    std::istringstream in(slurp(p));
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#')
            out.push_back(line);
    return out;
}

std::vector<std::string> errors_of(const std::string& text)
{
    try
    {
        parse_config(text);
    }
    catch (const ConfigError& e)
    {
        return e.errors();
    }
    return {};
}
}  // namespace

TEST_CASE("valid theta configuration")
{
    auto c = parse_config(
        "kind=theta\nseed=42\nreplicas=10000\nhorizon=32\nradius=14");
    CHECK(c.kind == ExperimentKind::theta);
    CHECK(c.seed == 42);
    CHECK(c.replicas == 10000);
    CHECK(c.horizon == 32);
    CHECK(c.radius == 14);
    CHECK(c.has("radius"));
    CHECK_FALSE(c.has("p"));
}

TEST_CASE("comments, blanks and lists")
{
    auto c = parse_config("# header\n\nkind = commutation  # trailing\n"
                          "p_grid = 0.1, 0.5,0.9\nschedule=4,8\n");
    CHECK(c.kind == ExperimentKind::commutation);
    CHECK(c.p_grid == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(c.schedule == std::vector<int>{4, 8});
}

TEST_CASE("configuration errors")
{
    auto range = errors_of("replicas=-1");
    REQUIRE(range.size() == 1);
    CHECK(range[0].find("line 1") != std::string::npos);
    CHECK(range[0].find("'replicas'") != std::string::npos);
    CHECK(range[0].find("out of range") != std::string::npos);

    auto dup = errors_of("seed=1\nradius=3\nseed=2");
    REQUIRE(dup.size() == 1);
    CHECK(dup[0].find("line 3") != std::string::npos);
    CHECK(dup[0].find("line 1") != std::string::npos);

    auto many = errors_of("colour=red\nhorizon=soon\njust text\np=1.5");
    REQUIRE(many.size() == 4);
    CHECK(many[0].find("unknown key 'colour'") != std::string::npos);
    CHECK(many[1].find("expected a number") != std::string::npos);
    CHECK(many[2].find("key=value") != std::string::npos);
    CHECK(many[3].find("'p'") != std::string::npos);

    CHECK(errors_of("schedule=8,4").size() == 1);
    CHECK(errors_of("kind=nonsense").size() == 1);
    CHECK(errors_of("boundary=periodic").size() == 1);
    CHECK(errors_of("radius=3\nseed=7\n").empty());
}

TEST_CASE("overrides")
{
    auto c = parse_config("kind=alpha");
    apply_override(c, "replicas", "2000");
    CHECK(c.replicas == 2000);
    CHECK(c.has("replicas"));
    CHECK_THROWS_AS(apply_override(c, "nope", "1"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "radius", "x"), ConfigError);
    CHECK(config_keys().size() == 18);
}

TEST_CASE("empty run")
{
    auto dir = scratch_dir("empty");
    auto c = parse_config("kind=simulate\nradius=0\nhorizon=0");
    auto r = run_experiment(c, dir);
    CHECK(r.exit_code == 0);
    CHECK(r.summary.find("flips=0") != std::string::npos);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(data_lines(dir / "flips_0.csv").size() == 1);
    CHECK(data_lines(dir / "final_0.csv").size() == 2);
    auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["exit_code"] == 0);
    CHECK(manifest["seed_manifest"]["master_seed"] == 1);
    CHECK(manifest["invariants_hold"] == true);
}

TEST_CASE("commutation suite passes and is reproducible")
{
    auto a = scratch_dir("comm_a"), b = scratch_dir("comm_b");
    auto c = parse_config("kind=commutation\nreplicas=20\nradius=6\nhorizon=3");
    auto ra = run_experiment(c, a);
    CHECK(ra.exit_code == 0);
    CHECK(ra.summary == "checks=180 violations=0");
    auto rb = run_experiment(c, b);
    for (const auto& f : ra.files)
    {
        if (f.extension() != ".csv")
            continue;
        CHECK(slurp(f) == slurp(b / f.filename()));
        CHECK(slurp(f).rfind("# medtree ", 0) == 0);
    }
}

TEST_CASE("theta run writes one row per grid point")
{
    auto dir = scratch_dir("theta");
    auto c = parse_config("kind=theta\nreplicas=1000\nhorizon=1\nradius=8");
    auto r = run_experiment(c, dir);
    CHECK(r.exit_code != 1);
    auto rows = data_lines(dir / "theta.csv");
    CHECK(rows.size() == 50);
    CHECK(data_lines(dir / "theta_samples.csv").size() == 1001);
    auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["config"]["schedule"] == nlohmann::json({2, 5, 8}));
}

TEST_CASE("operational errors exit with 1")
{
    auto dir = scratch_dir("small");
    auto c = parse_config("kind=theta\nreplicas=10");
    auto r = run_experiment(c, dir);
    CHECK(r.exit_code == 1);
    CHECK(r.summary.find("below the minimum") != std::string::npos);
}

TEST_CASE("simulate kind audits energy")
{
    auto dir = scratch_dir("sim");
    auto c = parse_config("kind=simulate\nradius=5\nhorizon=4\nreplicas=2");
    auto r = run_experiment(c, dir);
    CHECK(r.exit_code == 0);
    CHECK(r.summary.find("energy_violations=0") != std::string::npos);
    CHECK(fs::exists(dir / "flips_1.csv"));
}

TEST_CASE("output directory from the environment")
{
    ::setenv(output_dir_env, "/tmp/medtree_env_dir", 1);
    CHECK(default_output_dir() == fs::path("/tmp/medtree_env_dir"));
    ::unsetenv(output_dir_env);
    CHECK(default_output_dir() == fs::path("medtree-out"));
}

TEST_CASE("kinds round-trip")
{
    for (const auto& name : experiment_kinds())
    {
        auto k = parse_kind(name);
        REQUIRE(k);
        CHECK(to_string(*k) == name);
    }
    CHECK_FALSE(parse_kind("simulation"));
}
