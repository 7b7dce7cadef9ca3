#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

// end-to-end runs of the installed binary

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(RUIN_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = std::string("/tmp/ruin_cli_test_") + name;
    std::ofstream f(path);
    f << content;
    return path;
}

const char* kFirst =
    R"({"seasons":[{"weights":["0.5","0.25","0.25"]},{"weights":["0.4","0.3","0.3"]},{"weights":["0.3","0.35","0.35"]}],"mode":"float"})";

} // namespace

TEST_CASE("classify prints the class, mean, and branch") {
    const auto model = write_temp("first.json", kFirst);
    auto r = run("classify --model " + model);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("Subcritical") != std::string::npos);
    CHECK(r.out.find("E S=2.7") != std::string::npos);
    CHECK(r.out.find("branch 1 (s0 != 0)") != std::string::npos);
    CHECK(r.out.find("leading aggregate atom s0") != std::string::npos);
}

TEST_CASE("classify degenerate and supercritical models") {
    const auto degen = write_temp("degen.json",
        R"({"seasons":[{"weights":[0,0,0,1]},{"weights":[1]},{"weights":[1]}]})");
    auto r = run("classify --model " + degen);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("CriticalDegenerate") != std::string::npos);
    CHECK(r.out.find("psi=(1,1,1,0,0,...)") != std::string::npos);

    const auto super = write_temp("super.json",
        R"({"seasons":[{"weights":[0,0,1]},{"weights":[0,1]},{"weights":[0,1]}]})");
    auto s = run("classify --model " + super);
    CHECK(s.exit_code == 0);
    CHECK(s.out.find("Supercritical") != std::string::npos);
    CHECK(s.out.find("psi=1 for all u") != std::string::npos);
}

TEST_CASE("compute: exact and float modes give identical rounded tables") {
    const auto model = write_temp("first2.json", kFirst);
    auto f = run("compute --model " + model + " --u-max 8 --t-max 6 --format pretty --mode float");
    auto e = run("compute --model " + model + " --u-max 8 --t-max 6 --format pretty --mode exact");
    CHECK(f.exit_code == 0);
    CHECK(e.exit_code == 0);
    CHECK(f.out == e.out);
    CHECK(f.out.find("inf") != std::string::npos);
}

TEST_CASE("compute: single cell zero for the trivial model") {
    const auto model = write_temp("zero.json", R"({"seasons":[{"weights":[1]},{"weights":[1]},{"weights":[1]}]})");
    auto r = run("compute --model " + model + " --u-max 0 --t-max 1 --format csv");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("u,0\n") != std::string::npos);
    CHECK(r.out.find("1,0\n") != std::string::npos);
}

TEST_CASE("compute json carries solver metadata") {
    const auto model = write_temp("first3.json", kFirst);
    auto r = run("compute --model " + model + " --u-max 4 --t-max 2 --format json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"branch\": 1") != std::string::npos);
    CHECK(r.out.find("\"boundary_index\"") != std::string::npos);
    CHECK(r.out.find("\"precision_bits\"") != std::string::npos);
    CHECK(r.out.find("\"net_profit_class\": \"Subcritical\"") != std::string::npos);
}

TEST_CASE("exit codes: parse errors are 2, missing files too") {
    auto r = run("compute --model /nonexistent.json");
    CHECK(r.exit_code == 2);
    const auto bad = write_temp("bad.json", "{");
    auto b = run("classify --model " + bad);
    CHECK(b.exit_code == 2);
}

TEST_CASE("tables subcommand writes csvs and reports") {
    auto r = run("tables --out-dir /tmp");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("table1: all cells within 5e-4") != std::string::npos);
    CHECK(r.out.find("table3: all cells within 5e-4") != std::string::npos);
    std::ifstream t1("/tmp/table1.csv");
    REQUIRE(t1.good());
    std::string header;
    std::getline(t1, header);
    CHECK(header == "u,0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20");
}

TEST_CASE("mc-check passes on the first example and is deterministic") {
    const auto model = write_temp("first4.json", kFirst);
    auto a = run("mc-check --model " + model + " --paths 20000 --seed 7");
    CHECK(a.exit_code == 0);
    CHECK(a.out.find("max|z|") != std::string::npos);
    auto b = run("mc-check --model " + model + " --paths 20000 --seed 7");
    CHECK(a.out == b.out);
}
