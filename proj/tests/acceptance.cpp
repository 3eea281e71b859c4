// Acceptance runner: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "twistlab/twistlab.hpp"

using namespace twistlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;
};

Outcome checks_for(const Verifier& v, int criterion, std::size_t from) {
    Outcome o;
    for (std::size_t i = from; i < v.checks().size(); ++i) {
        const Check& c = v.checks()[i];
        if (c.criterion != criterion || c.pass) continue;
        o.pass = false;
        o.notes.push_back(c.name + ": " + format_double(c.measured) + " " + c.relation + " " + format_double(c.bound));
    }
    return o;
}

double seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_verify_cli(const fs::path& out) {
    fs::remove_all(out);
    const std::string cmd = std::string(TWISTLAB_CLI) + " verify --out " + out.string() + " > " +
                            (out.string() + ".log") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void print(int criterion, const Outcome& o, double secs) {
    std::printf("CRITERION %d: %s (%.1f s)\n", criterion, o.pass ? "PASS" : "FAIL", secs);
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    std::fflush(stdout);
}

} // namespace

int main() {
    Verifier v(ExperimentConfig{});
    const std::vector<std::function<void(Verifier&)>> criteria{criterion_1, criterion_2, criterion_3,
                                                                criterion_4, criterion_5, criterion_6,
                                                                criterion_7, criterion_8, criterion_9};
    const std::vector<double> limits{10.0, 60.0, 0, 0, 0, 0, 0, 0, 0};
    bool all = true;

    for (int c = 1; c <= 9; ++c) {
        const std::size_t from = v.checks().size();
        const std::size_t timed_from = v.timings().size();
        auto t0 = std::chrono::steady_clock::now();
        try {
            criteria[c - 1](v);
        } catch (const std::exception& e) {
            Outcome o;
            o.pass = false;
            o.notes.push_back(std::string("error: ") + e.what());
            print(c, o, seconds(t0));
            all = false;
            continue;
        }
        const double secs = seconds(t0);
        Outcome o = checks_for(v, c, from);
        if (limits[c - 1] > 0 && secs > limits[c - 1]) {
            o.pass = false;
            o.notes.push_back("runtime " + format_double(secs) + " s > " + format_double(limits[c - 1]) + " s");
        }
        if (c == 9) {
            for (std::size_t i = timed_from; i < v.timings().size(); ++i) {
                const auto& [label, t] = v.timings()[i];
                if (t > 30.0) {
                    o.pass = false;
                    o.notes.push_back(label + " took " + format_double(t) + " s > 30 s");
                }
            }
        }
        all = all && o.pass;
        print(c, o, secs);
    }

    const fs::path base = fs::temp_directory_path() / "twistlab_acceptance";
    fs::create_directories(base);
    Outcome o10;
    auto t0 = std::chrono::steady_clock::now();
    const int first = run_verify_cli(base / "run1");
    const double secs = seconds(t0);
    const int second = run_verify_cli(base / "run2");
    if (first != 0 || second != 0) {
        o10.pass = false;
        o10.notes.push_back("verify exit codes " + std::to_string(first) + ", " + std::to_string(second));
    }
    if (secs > 300.0) {
        o10.pass = false;
        o10.notes.push_back("verify took " + format_double(secs) + " s > 300 s");
    }
    const std::string a = slurp(base / "run1" / "verify.json");
    const std::string b = slurp(base / "run2" / "verify.json");
    if (a.empty() || a != b) {
        o10.pass = false;
        o10.notes.push_back("verify.json differs between reruns");
    }
    all = all && o10.pass;
    print(10, o10, secs);

    return all ? 0 : 1;
}
