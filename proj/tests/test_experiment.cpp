#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"

#include "bsim/experiment.hpp"

using namespace bsim;
using Json = nlohmann::ordered_json;

namespace {

struct Process {
    int exit_code = -1;
    std::string out;
};

// Runs the CLI with `args`, capturing stdout; stderr goes to `err_path` if given.
Process run_cli(const std::string& args, const std::string& err_path = "/dev/null") {
    const std::string cmd = std::string(BSIM_CLI_PATH) + " " + args + " 2>" + err_path;
    Process p;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) p.out.append(buf.data(), n);
    const int status = pclose(pipe);
    p.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return p;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "bsim_test_experiment";
    std::filesystem::create_directories(dir);
    return dir;
}

Json run_json(const std::string& name, const std::map<std::string, std::string>& params, std::uint64_t seed) {
    return to_json(run(make_spec(name, params, seed)));
}

}  // namespace

TEST_CASE("experiment names round-trip") {
    for (const char* name : {"hom", "bell-measure", "teleport-dv", "qkd-dv", "mdi-qkd", "photon-subtract",
                             "hadamard", "cnot", "mzi", "rng", "g2", "homodyne", "teleport-cv", "qkd-cv",
                             "physicality"})
        CHECK(std::string(to_string(parse_experiment(name))) == name);
    CHECK_THROWS_AS(parse_experiment("teleport"), ValidationError);
}

TEST_CASE("teleport-dv run") {
    const double h = 1.0 / std::numbers::sqrt2;
    std::ostringstream alpha, beta;
    alpha.precision(17);
    beta.precision(17);
    alpha << h << ",0";
    beta << "0," << h;
    const Json j = run_json("teleport-dv", {{"alpha", alpha.str()}, {"beta", beta.str()}, {"trials", "1000"}}, 7);
    CHECK(std::abs(j["exact"]["success_probability"].get<double>() - 0.5) < 1e-12);
    CHECK(std::abs(j["sampled"]["success_rate"].get<double>() - 0.5) < 0.05);
    CHECK(std::abs(j["sampled"]["min_success_fidelity"].get<double>() - 1.0) < 1e-12);
}

TEST_CASE("hom run has no coincidences") {
    const Json j = run_json("hom", {{"theta", "0.7853981633974483"}, {"phi", "1.5707963267948966"}}, 42);
    CHECK(std::abs(j["exact"]["coincidence_probability"].get<double>()) < 1e-12);
    CHECK(std::abs(j["exact"]["bunching_probability"].get<double>() - 1.0) < 1e-12);
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(make_spec("rng", {{"trials", "0"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("rng", {{"trials", "ten"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("warp", {}), ValidationError);
    CHECK_THROWS_AS(make_spec("hom", {{"gamma", "1"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("cnot", {{"theta", "0.1"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("teleport-dv", {{"alpha", "1,0"}, {"beta", "1,0"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("photon-subtract", {{"theta", "0"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("teleport-cv", {{"r", "-1"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("g2", {{"alpha", "0"}}), ValidationError);
    CHECK_THROWS_AS(make_spec("hom", {{"theta", "nan"}}), ValidationError);
    CHECK_NOTHROW(make_spec("rng", {{"trials", "10"}}));
}

TEST_CASE("complex parsing") {
    CHECK(parse_complex("1,2") == std::complex<double>(1.0, 2.0));
    CHECK(parse_complex("-0.5") == std::complex<double>(-0.5, 0.0));
    CHECK_THROWS_AS(parse_complex("1,2,3"), ValidationError);
    CHECK_THROWS_AS(parse_complex("x"), ValidationError);
}

TEST_CASE("JSON schema and encodings") {
    const Json g2 = run_json("g2", {{"alpha", "1,2"}}, 42);
    std::vector<std::string> keys;
    for (const auto& [k, v] : g2.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"experiment", "params", "seed", "exact", "sampled", "runtime_ms"});
    CHECK(g2["params"]["alpha"] == Json::parse("[1.0, 2.0]"));
    CHECK(g2["sampled"].empty());
    CHECK(g2["sampled"].is_object());

    const Json cv = run_json("teleport-cv", {}, 42);
    CHECK(cv["exact"]["input_cov"] == Json::parse("[[0.5, 0.0], [0.0, 0.5]]"));
}

TEST_CASE("exact sections do not depend on the seed") {
    for (const char* name : {"hom", "teleport-dv", "qkd-dv", "mdi-qkd", "photon-subtract", "mzi", "rng",
                             "teleport-cv", "qkd-cv"}) {
        const Json base = run_json(name, {{"trials", "200"}}, 1);
        for (std::uint64_t seed : {2, 3, 99, 12345}) {
            const Json other = run_json(name, {{"trials", "200"}}, seed);
            CHECK_MESSAGE(other["exact"] == base["exact"], name);
        }
    }
}

TEST_CASE("identical specs reproduce sampled output") {
    for (const char* name : {"hom", "bell-measure", "rng", "qkd-cv", "teleport-cv"}) {
        const Json a = run_json(name, {{"trials", "500"}}, 11);
        const Json b = run_json(name, {{"trials", "500"}}, 11);
        CHECK_MESSAGE(a["sampled"] == b["sampled"], name);
    }
}

TEST_CASE("table output is readable") {
    const auto text = emit(run(make_spec("rng", {{"trials", "10"}})), OutputFormat::Table);
    CHECK(text.find("rng") != std::string::npos);
    CHECK(text.find("distribution") != std::string::npos);
}

TEST_CASE("CLI exit codes and output") {
    const auto dir = scratch_dir();
    const auto ok = run_cli("run rng --trials 100 --seed 3 --format json");
    CHECK(ok.exit_code == 0);
    CHECK(Json::parse(ok.out)["sampled"]["bits"].get<std::string>().size() == 100);

    const auto err_path = (dir / "err.json").string();
    const auto bad = run_cli("run rng --trials 0", err_path);
    CHECK(bad.exit_code == 2);
    const Json err = Json::parse(read_file(err_path));
    CHECK(err["error"]["type"] == "validation");

    CHECK(run_cli("run nothing").exit_code == 2);
    CHECK(run_cli("run hom --theta").exit_code == 2);
    CHECK(run_cli("run hom --format xml").exit_code == 2);
    CHECK(run_cli("run cnot --trials 5").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);
}

TEST_CASE("CLI writes JSON to --out") {
    const auto path = scratch_dir() / "out.json";
    std::filesystem::remove(path);
    const auto p = run_cli("run mzi --trials 50 --out " + path.string());
    CHECK(p.exit_code == 0);
    CHECK(p.out.empty());
    const Json j = Json::parse(read_file(path));
    CHECK(j["experiment"] == "mzi");
    CHECK(j["params"]["trials"] == 50);
}

TEST_CASE("CLI config file with flag override") {
    const auto dir = scratch_dir();
    const auto cfg = dir / "run.ini";
    {
        std::ofstream out(cfg);
        out << "trials = 20\nseed = 5\nalpha = 1,0\nr = 0.5\n";
    }
    const auto from_file = run_cli("run teleport-cv --format json --config " + cfg.string());
    REQUIRE(from_file.exit_code == 0);
    const Json a = Json::parse(from_file.out);
    CHECK(a["seed"] == 5);
    CHECK(a["params"]["trials"] == 20);
    CHECK(a["params"]["r"] == 0.5);
    CHECK(a["params"]["alpha"] == Json::parse("[1.0, 0.0]"));

    const auto overridden = run_cli("run teleport-cv --format json --r 1.5 --config " + cfg.string());
    REQUIRE(overridden.exit_code == 0);
    CHECK(Json::parse(overridden.out)["params"]["r"] == 1.5);

    {
        std::ofstream out(cfg);
        out << "warp = 9\n";
    }
    CHECK(run_cli("run rng --config " + cfg.string()).exit_code == 2);
}

TEST_CASE("CLI output is byte-identical apart from runtime") {
    auto strip = [](const std::string& text) {
        Json j = Json::parse(text);
        j.erase("runtime_ms");
        return j.dump();
    };
    const auto first = run_cli("run qkd-cv --trials 300 --seed 9 --format json");
    const auto second = run_cli("run qkd-cv --trials 300 --seed 9 --format json");
    REQUIRE(first.exit_code == 0);
    CHECK(strip(first.out) == strip(second.out));
}
