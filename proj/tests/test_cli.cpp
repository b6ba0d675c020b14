#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpsim/cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace cpsim::cli;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("cpsim_test_" + name);
    fs::remove_all(d);
    return d;
}
}  // namespace

TEST_CASE("config text parsing") {
    const auto kv = parse_config_text("mu = 2.5\n# comment\n\nseed=9 # trailing\n");
    CHECK(kv.at("mu") == "2.5");
    CHECK(kv.at("seed") == "9");
    CHECK(kv.size() == 2);
    CHECK_THROWS_AS(parse_config_text("just a line\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("= 3\n"), std::invalid_argument);
}

TEST_CASE("config resolution rejects unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(resolve_config({{"mv", "3.0"}}), doctest::Contains("mv"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(resolve_config({{"mu", "-1"}}), doctest::Contains("mu"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(resolve_config({{"epsilon", "1.5"}}),
                         doctest::Contains("epsilon"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(resolve_config({{"mask", "diagonal"}}),
                         doctest::Contains("mask"), std::invalid_argument);
    CHECK_THROWS_AS(resolve_config({{"mu", "abc"}}), std::invalid_argument);
}

TEST_CASE("config resolution fills derived defaults") {
    const auto cfg = resolve_config({{"mu", "2.0"}, {"horizon", "10"}});
    CHECK(cfg.at("x_min") == "-60");  // -ceil(3 * 1 * 2 * 10)
    CHECK(cfg.at("x_max") == "20");   // ceil(1 * 2 * 10)
    CHECK(cfg.at("margin") == "2.5");
    CHECK(cfg.at("mask") == "full");
    // explicit values win over the derivation
    const auto cfg2 = resolve_config({{"mu", "2.0"}, {"horizon", "10"}, {"x_min", "-33"}});
    CHECK(cfg2.at("x_min") == "-33");
}

TEST_CASE("digest is stable and content sensitive") {
    CHECK(digest_hex("") == "cbf29ce484222325");  // FNV-1a offset basis
    CHECK(digest_hex("a") != digest_hex("b"));
    CHECK(digest_hex("abc") == digest_hex("abc"));
}

TEST_CASE("execute writes artifacts, summary and manifest") {
    const auto out = fresh_dir("exec");
    const auto res = execute(
        "survival",
        {{"horizon", "5"}, {"replicas", "10"}, {"seed", "2"}, {"x_min", "-30"},
         {"x_max", "30"}},
        out.string());
    CHECK(res.status == 0);
    const fs::path dir(res.run_dir);
    CHECK(fs::exists(dir / "survival.csv"));
    CHECK(fs::exists(dir / "survival.json"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(first_line(dir / "survival.csv") == "replica,survived,boundary_contaminated");

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("tool_version") == kToolVersion);
    CHECK(manifest.at("command") == "survival");
    CHECK(manifest.at("master_seed") == 2);
    CHECK(manifest.at("replica_count") == 10);
    CHECK(manifest.at("full_config").at("mu") == "3.0");
    for (const auto& f : manifest.at("output_files")) {
        const auto path = dir / f.at("path").get<std::string>();
        CHECK(digest_file(path.string()) == f.at("digest").get<std::string>());
    }
}

TEST_CASE("reruns are byte identical and run directories are append-only") {
    const auto out = fresh_dir("rerun");
    const std::map<std::string, std::string> cfg = {
        {"horizon", "5"}, {"replicas", "8"}, {"seed", "4"}, {"x_min", "-30"},
        {"x_max", "30"}};
    const auto a = execute("survival", cfg, out.string());
    const auto b = execute("survival", cfg, out.string());
    CHECK(a.run_dir != b.run_dir);  // second run gets a fresh directory
    CHECK(slurp(fs::path(a.run_dir) / "survival.csv") ==
          slurp(fs::path(b.run_dir) / "survival.csv"));
    CHECK(slurp(fs::path(a.run_dir) / "survival.json") ==
          slurp(fs::path(b.run_dir) / "survival.json"));
}

TEST_CASE("replica prefix property shows up in the artifacts") {
    const auto out = fresh_dir("prefix");
    std::map<std::string, std::string> small = {
        {"horizon", "5"}, {"replicas", "6"}, {"seed", "4"}, {"x_min", "-30"},
        {"x_max", "30"}};
    auto big = small;
    big["replicas"] = "12";
    const auto a = execute("survival", small, out.string());
    const auto b = execute("survival", big, out.string());
    const auto sa = slurp(fs::path(a.run_dir) / "survival.csv");
    const auto sb = slurp(fs::path(b.run_dir) / "survival.csv");
    CHECK(sb.substr(0, sa.size()) == sa);
}

TEST_CASE("window doubling appends a stability verdict") {
    const auto out = fresh_dir("doubling");
    const auto res = execute(
        "survival",
        {{"horizon", "5"}, {"replicas", "30"}, {"seed", "6"}, {"x_min", "-40"},
         {"x_max", "40"}},
        out.string(), true);
    const auto manifest =
        nlohmann::json::parse(slurp(fs::path(res.run_dir) / "manifest.json"));
    REQUIRE(manifest.contains("window_doubling"));
    const auto& v = manifest.at("window_doubling");
    CHECK(v.contains("p_hat"));
    CHECK(v.contains("p_hat_doubled"));
    CHECK(v.contains("stable"));
}

TEST_CASE("golden CSV headers per command") {
    const auto out = fresh_dir("golden");
    std::map<std::string, std::string> tiny = {
        {"horizon", "4"},  {"replicas", "3"},   {"seed", "1"},
        {"x_min", "-25"},  {"x_max", "25"},     {"n_max", "8"},
        {"n_list", "2,4"}, {"t0", "1"}};
    const std::map<std::string, std::pair<std::string, std::string>> golden = {
        {"endpoint-equality",
         {"endpoint_eq.csv", "replica,agrees,first_violation_time,excluded_boundary"}},
        {"agreement",
         {"agreement.csv", "replica,agrees,first_violation_time,excluded_boundary"}},
        {"shape", {"shape.csv", "replica,f_survived,passes,excluded_boundary"}},
        {"breakpoints", {"breakpoints.csv", "replica,k,psi,r,censored"}},
        {"restart",
         {"restart.csv",
          "replica,N,censored,sigma_N,final_position,chain_restarts,attempts"}},
        {"clt", {"clt.csv", "replica,survived,boundary_contaminated,r_T"}},
        {"percolation", {"percolation.csv", "replica,tau,survived,final_size,L,R"}},
        {"deficit-decay", {"decay.csv", "n,trials,successes,p_hat,ci_low,ci_high"}},
        {"scan-runs", {"decay.csv", "n,trials,successes,p_hat,ci_low,ci_high"}},
    };
    for (const auto& [cmd, expect] : golden) {
        auto cfg = tiny;
        if (cmd == "scan-runs") cfg["n_list"] = "4,8";  // floor(b*n) must be >= 1
        const auto res = execute(cmd, cfg, out.string());
        CHECK(first_line(fs::path(res.run_dir) / expect.first) == expect.second);
        CHECK(fs::exists(fs::path(res.run_dir) / (cmd + ".json")));
    }
}

TEST_CASE("unknown command is a machine-readable error") {
    const auto out = fresh_dir("unknown");
    CHECK_THROWS_WITH_AS(execute("surviv", {}, out.string()),
                         doctest::Contains("surviv"), std::invalid_argument);
}
