#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// Drives the installed CLI binary end to end. The binary path and fixture
// directory come from the BISTATS_CLI / BISTATS_FIXTURES environment set by
// ctest.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli() {
    const char* path = std::getenv("BISTATS_CLI");
    REQUIRE(path != nullptr);
    return path;
}

fs::path fixtures() {
    const char* path = std::getenv("BISTATS_FIXTURES");
    REQUIRE(path != nullptr);
    return path;
}

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "bistats_cli_test";
    fs::create_directories(dir);
    return dir;
}

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    const auto out_file = work_dir() / "stdout.txt";
    const auto err_file = work_dir() / "stderr.txt";
    const std::string command =
        cli() + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WEXITSTATUS(status);
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

fs::path write_file(const std::string& name, const std::string& content) {
    const auto path = work_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

std::string fixture(const std::string& name) { return (fixtures() / name).string(); }

}  // namespace

TEST_CASE("mean of a constant dataset") {
    const auto data = write_file("const.json", R"({
        "schema": "bistats-dataset/1", "group": "translation:1",
        "samples": [[5.0], [5.0], [5.0]]})");
    const auto result = run("mean " + data.string());
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report["mean"][0].get<double>() == 5.0);
    CHECK(report["iterations"].get<int>() <= 1);
    CHECK(report["schema"] == "bistats-report/1");
}

TEST_CASE("mean of {0, 2} is 1") {
    const auto data = write_file("two.json", R"({
        "schema": "bistats-dataset/1", "group": "translation:1",
        "samples": [[0.0], [2.0]]})");
    const auto result = run("mean " + data.string());
    REQUIRE(result.exit_code == 0);
    CHECK(json::parse(result.out)["mean"][0].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("malformed JSON is an input error with a position diagnostic") {
    const auto data = write_file("broken.json", "{ \"schema\": \"bistats-dataset/1\", \n oops");
    const auto result = run("mean " + data.string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("input error") != std::string::npos);
    CHECK(result.err.find("line") != std::string::npos);
}

TEST_CASE("non-convergence is a numerical failure with the residual") {
    const auto data = write_file("noconv.json", R"({
        "schema": "bistats-dataset/1", "group": "translation:1",
        "samples": [[0.0], [2.0]]})");
    const auto result = run("mean " + data.string() + " --max-iter 0");
    CHECK(result.exit_code == 2);
    CHECK(result.err.find("residual") != std::string::npos);
}

TEST_CASE("test on identical files gives p = 1 and exit code 0") {
    const auto result =
        run("test " + fixture("se3_null_a.json") + " " + fixture("se3_null_a.json") +
            " --permutations 200 --seed 3");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report["p_value"].get<double>() == 1.0);
    CHECK(report["baseline"].get<double>() == 0.0);
    CHECK(report["significant"] == false);
}

TEST_CASE("seeded runs are byte-identical, including across worker counts") {
    const std::string args = "test " + fixture("se3_null_a.json") + " " +
                             fixture("se3_shifted_b.json") + " --permutations 300 --seed 17";
    const auto first = run(args);
    const auto second = run(args);
    REQUIRE(first.exit_code == 0);
    CHECK(first.out == second.out);

    const auto threaded = run(args + " --threads 4");
    const json a = json::parse(first.out);
    const json b = json::parse(threaded.out);
    CHECK(a["p_value"] == b["p_value"]);
    CHECK(a["baseline"] == b["baseline"]);
    CHECK(a["degenerate_permutations"] == b["degenerate_permutations"]);
}

TEST_CASE("the recorded SE(3) fixtures separate as expected") {
    const auto shifted =
        run("test " + fixture("se3_null_a.json") + " " + fixture("se3_shifted_b.json") +
            " --permutations 500 --seed 7");
    REQUIRE(shifted.exit_code == 0);
    CHECK(json::parse(shifted.out)["p_value"].get<double>() < 0.05);

    const auto null_pair =
        run("test " + fixture("se3_null_a.json") + " " + fixture("se3_null_b.json") +
            " --permutations 500 --seed 7");
    REQUIRE(null_pair.exit_code == 0);
    CHECK(json::parse(null_pair.out)["p_value"].get<double>() > 0.05);

    // both statistics flag the shifted pair
    const auto bhat =
        run("test " + fixture("se3_null_a.json") + " " + fixture("se3_shifted_b.json") +
            " --permutations 500 --seed 7 --statistic bhattacharyya");
    REQUIRE(bhat.exit_code == 0);
    CHECK(json::parse(bhat.out)["p_value"].get<double>() < 0.05);
}

TEST_CASE("localtest on identical inputs accepts every component") {
    const auto result = run("localtest " + fixture("pow_a.json") + " " + fixture("pow_a.json") +
                            " --permutations 200 --seed 5");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    for (const auto& p : report["p_values"]) CHECK(p.get<double>() == 1.0);
    for (const auto& r : report["reject_mask"]) CHECK(r.get<bool>() == false);
}

TEST_CASE("localtest flags exactly the shifted component of the fixture") {
    const auto result = run("localtest " + fixture("pow_a.json") + " " + fixture("pow_b.json") +
                            " --permutations 400 --seed 11");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report["reject_mask"] == json::array({false, false, true, false}));
    const double shifted_p = report["p_values"][2].get<double>();
    for (int i : {0, 1, 3}) CHECK(shifted_p < report["p_values"][i].get<double>());
}

TEST_CASE("globaltest reports a significant global p on the shifted fixture") {
    const auto result = run("globaltest " + fixture("pow_a.json") + " " + fixture("pow_b.json") +
                            " --permutations 400 --seed 11");
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report["global_p"].get<double>() < 0.05);
    CHECK(report["global_significant"] == true);
}

TEST_CASE("a weight vector of ones reproduces the unweighted results") {
    const auto ones = write_file("ones.json", "[1.0, 1.0, 1.0, 1.0]");
    const std::string base_args = "globaltest " + fixture("pow_a.json") + " " +
                                  fixture("pow_b.json") + " --permutations 300 --seed 13";
    const auto plain = run(base_args);
    const auto weighted = run(base_args + " --weights " + ones.string());
    REQUIRE(plain.exit_code == 0);
    REQUIRE(weighted.exit_code == 0);
    json a = json::parse(plain.out);
    json b = json::parse(weighted.out);
    // identical inference output; the config echo records the flag
    CHECK(a["global_p"] == b["global_p"]);
    CHECK(a["p_values"] == b["p_values"]);
    CHECK(a["reject_mask"] == b["reject_mask"]);
    CHECK(b["config"]["weights"] != "");
}

TEST_CASE("synth with zero covariance repeats the mean and is deterministic") {
    const auto zero_cov = write_file("zero_cov.json", R"({
        "schema": "bistats-covariance/1", "group": "translation:2",
        "matrix": [[0.0, 0.0], [0.0, 0.0]]})");
    const auto mean = write_file("mean2.json", R"({
        "schema": "bistats-element/1", "group": "translation:2",
        "payload": [1.5, -2.5]})");
    const std::string args = "synth --group translation:2 --mean " + mean.string() + " --cov " +
                             zero_cov.string() + " -n 4 --seed 9";
    const auto first = run(args);
    REQUIRE(first.exit_code == 0);
    const json data = json::parse(first.out);
    CHECK(data["samples"].size() == 4);
    for (const auto& s : data["samples"]) {
        CHECK(s[0].get<double>() == 1.5);
        CHECK(s[1].get<double>() == -2.5);
    }
    const auto second = run(args);
    CHECK(first.out == second.out);
}

TEST_CASE("pose of identical meshes is the identity") {
    const auto mesh = write_file("cloud.off",
                                 "OFF\n8 0 0\n"
                                 "-3 -2 -1\n-3 -2 1\n-3 2 -1\n-3 2 1\n"
                                 "3 -2 -1\n3 -2 1\n3 2 -1\n3 2 1\n");
    const auto result = run("pose " + mesh.string() + " " + mesh.string());
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    const auto& sample = report["samples"][0];
    for (int i = 0; i < 3; ++i) {
        CHECK(sample["t"][i].get<double>() == doctest::Approx(0.0).scale(1.0));
        for (int j = 0; j < 3; ++j) {
            CHECK(sample["R"][i][j].get<double>() ==
                  doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("diffcoords of an identical mesh is the identity deformation") {
    const auto mesh = write_file("tri.off",
                                 "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 2 3\n");
    const auto result = run("diffcoords " + mesh.string() + " " + mesh.string());
    REQUIRE(result.exit_code == 0);
    const json report = json::parse(result.out);
    CHECK(report["group"] == "power:glplus:3:2");
    for (const auto& face : report["samples"][0]) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                CHECK(face[i][j].get<double>() ==
                      doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("diffcoords with mismatched connectivity is an input error") {
    const auto mesh_a = write_file("a.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    const auto mesh_b =
        write_file("b.off", "OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 2 3\n");
    const auto result = run("diffcoords " + mesh_a.string() + " " + mesh_b.string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("face") != std::string::npos);
}

TEST_CASE("unknown statistic and missing files are input errors") {
    const auto bad_stat = run("test " + fixture("se3_null_a.json") + " " +
                              fixture("se3_null_b.json") + " --statistic pearson");
    CHECK(bad_stat.exit_code == 1);
    const auto missing = run("mean /nonexistent/data.json");
    CHECK(missing.exit_code == 1);
}
