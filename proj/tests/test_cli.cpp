// End-to-end checks of the rwre binary: exit codes, report files, and the
// worker-count independence of emitted bytes. The binary path comes from
// RWRE_CLI (set by ctest).

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("RWRE_CLI");
    return p ? p : "";
}

std::string spec_dir() {
    const char* p = std::getenv("RWRE_SPEC_DIR");
    return p ? p : "";
}

int run(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "rwre_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("cli: exit codes for validate and find-s" * doctest::skip(cli_path().empty())) {
    const std::string specs = spec_dir();
    CHECK(run("validate --spec " + specs + "/golden.json") == 0);
    CHECK(run("validate --spec " + specs + "/bad_not_normalized.json") == 1);
    CHECK(run("validate --spec /nonexistent.json") == 1);

    const auto dir = scratch("finds");
    CHECK(run("find-s --spec " + specs + "/golden.json --seed 7 --out " +
              dir.string()) == 0);
    nlohmann::json j;
    std::ifstream(dir / "find-s.json") >> j;
    CHECK(std::abs(j["results"]["s"].get<double>() - 0.6942419) < 1e-4);
    CHECK(j["seed"] == 7);

    CHECK(run("find-s --spec " + specs + "/positive_speed.json --seed 7 --out " +
              dir.string()) == 2);
}

TEST_CASE("cli: reports are byte-identical across worker counts" *
          doctest::skip(cli_path().empty())) {
    const std::string specs = spec_dir();
    const auto d1 = scratch("w1");
    const auto d2 = scratch("w2");
    const std::string base = "survival --spec " + specs +
                             "/golden.json --N 30 --M 30 --n 400 --envs 5 --seed 3";
    CHECK(run(base + " --workers 1 --out " + d1.string()) == 0);
    CHECK(run(base + " --workers 2 --out " + d2.string()) == 0);
    CHECK(slurp(d1 / "survival.csv") == slurp(d2 / "survival.csv"));
    CHECK(slurp(d1 / "survival.json") == slurp(d2 / "survival.json"));
    CHECK_FALSE(slurp(d1 / "survival.csv").empty());
}

TEST_CASE("cli: moment curve feeds rate-function and find-s" *
          doctest::skip(cli_path().empty())) {
    const std::string specs = spec_dir();
    const auto dir = scratch("pipeline");
    CHECK(run("moment-curve --spec " + specs +
              "/golden.json --method exact --n 12 --seed 5 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "moment_curve.csv"));
    CHECK(run("rate-function --curve " + (dir / "moment_curve.csv").string() +
              " --seed 5 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "rate_function.csv"));
    CHECK(run("find-s --spec " + specs + "/golden.json --seed 5 --curve " +
              (dir / "moment_curve.csv").string() + " --out " + dir.string()) == 0);
    nlohmann::json j;
    std::ifstream(dir / "find-s.json") >> j;
    CHECK(std::abs(j["results"]["s"].get<double>() - 0.6942419) < 1e-4);
}

TEST_CASE("cli: exact-enumeration gamma" * doctest::skip(cli_path().empty())) {
    const auto dir = scratch("gamma");
    CHECK(run("estimate-gamma --spec " + spec_dir() +
              "/golden.json --method exact --n 12 --seed 5 --out " + dir.string()) == 0);
    nlohmann::json j;
    std::ifstream(dir / "estimate-gamma.json") >> j;
    CHECK(std::abs(j["results"]["value"].get<double>() + 0.5 * std::log(2.0)) < 1e-9);
    CHECK(j["results"]["method"] == "exact-enumeration");
    CHECK(j["results"]["std_error"] == 0.0);
}
