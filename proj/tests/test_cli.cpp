#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("twistlab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args, const fs::path& out) {
    const std::string cmd = std::string(TWISTLAB_CLI) + " " + args + " --out " + out.string() + " > " +
                            (out / "stdout.txt").string() + " 2> " + (out / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST(Cli, InvertedAnnulusExitsTwo) {
    auto out = scratch("ab");
    EXPECT_EQ(run("energy --set a=2 --set b=1", out), 2);
    EXPECT_NE(slurp(out / "stderr.txt").find("a"), std::string::npos);
}

TEST(Cli, SelfIntersectingTorusExitsTwo) {
    auto out = scratch("rho");
    EXPECT_EQ(run("torus --set rho=0.5 --set n_s=17 --set n_psi=16", out), 2);
    EXPECT_NE(slurp(out / "stderr.txt").find("rho"), std::string::npos);
}

TEST(Cli, UnknownConfigKeyExitsTwo) {
    auto out = scratch("key");
    fs::path cfg = out / "bad.cfg";
    std::ofstream(cfg) << "colour = red\n";
    EXPECT_EQ(run("energy --config " + cfg.string(), out), 2);
    EXPECT_NE(slurp(out / "stderr.txt").find("colour"), std::string::npos);
}

TEST(Cli, CorruptMapFileExitsTwo) {
    auto out = scratch("map");
    fs::path map = out / "broken.csv";
    std::ofstream(map) << "garbage,not,a,map\n1,2\n";
    EXPECT_EQ(run("symmetrise --set map_file=" + map.string(), out), 2);
}

TEST(Cli, EmptyDegreeRangeWritesEmptyTable) {
    auto out = scratch("empty");
    EXPECT_EQ(run("energy --set k_min=2 --set k_max=1 --resolution 33,32", out), 0);
    EXPECT_TRUE(fs::exists(out / "energy_table.csv"));
}

TEST(Cli, LoopSolveWritesReport) {
    auto out = scratch("loop");
    EXPECT_EQ(run("loop-solve --set loop_n=2", out), 0);
    EXPECT_NE(slurp(out / "loop_solve.json").find("\"command\": \"loop-solve\""), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "loop_profile.csv"));
}

TEST(Cli, LoopSolveOddDimensionExitsOne) {
    auto out = scratch("odd");
    EXPECT_NE(run("loop-solve --set loop_n=3", out), 0);
}

TEST(Cli, TorusWritesFieldAndReport) {
    auto out = scratch("torus");
    EXPECT_EQ(run("torus --set n_s=33 --set n_psi=32", out), 0);
    EXPECT_TRUE(fs::exists(out / "torus_report.json"));
    EXPECT_TRUE(fs::exists(out / "torus_field.csv"));
}

TEST(Cli, VerifySingleModule) {
    auto out = scratch("verify");
    EXPECT_EQ(run("verify --module topology", out), 0);
    EXPECT_NE(slurp(out / "verify.json").find("\"module\": \"topology\""), std::string::npos);
}

TEST(Cli, UnknownSubcommandExitsTwo) {
    auto out = scratch("sub");
    EXPECT_EQ(run("frobnicate", out), 2);
}
