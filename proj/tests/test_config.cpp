#include <gtest/gtest.h>

#include <sstream>

#include "twistlab/config.hpp"
#include "twistlab/report.hpp"

using namespace twistlab;

TEST(Config, ParsesKeyValueLines) {
    ExperimentConfig cfg;
    std::istringstream in("# comment\n a = 2\nb=3.5\n\nepsilons = 0.01, 0.02\nsuite_k = -1,1\nseed = 7\n");
    apply_config(cfg, in);
    EXPECT_EQ(cfg.a, 2.0);
    EXPECT_EQ(cfg.b, 3.5);
    EXPECT_EQ(cfg.epsilons, (std::vector<double>{0.01, 0.02}));
    EXPECT_EQ(cfg.suite_k, (std::vector<int>{-1, 1}));
    EXPECT_EQ(cfg.seed, 7u);
}

TEST(Config, UnknownKeyIsRejected) {
    ExperimentConfig cfg;
    try {
        cfg.set("radius", "3");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("radius"), std::string::npos);
    }
}

TEST(Config, MalformedValueNamesTheKey) {
    ExperimentConfig cfg;
    try {
        cfg.set("n_r", "many");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("n_r"), std::string::npos);
    }
}

TEST(Config, ValidateNamesTheField) {
    ExperimentConfig cfg;
    cfg.a = 3.0;
    cfg.b = 2.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    ExperimentConfig t;
    t.rho = 0.9;
    try {
        t.validate();
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("rho"), std::string::npos);
    }
}

TEST(Config, EntriesRoundTrip) {
    ExperimentConfig cfg;
    cfg.epsilons = {0.2};
    cfg.torus_a = 0.25;
    ExperimentConfig back;
    for (const auto& [k, v] : cfg.entries()) back.set(k, v);
    EXPECT_EQ(back.entries(), cfg.entries());
}

TEST(Config, OutputDirectoryIsNotEchoed) {
    ExperimentConfig a, b;
    a.out = "x";
    b.out = "y";
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Verify, ReportIsDeterministic) {
    auto run = [] {
        Verifier v(ExperimentConfig{});
        run_verify(v, "topology");
        return verify_json(v, "topology").dump(2);
    };
    const std::string first = run();
    EXPECT_EQ(first, run());
    EXPECT_NE(first.find("\"passed\": true"), std::string::npos);
}

TEST(Verify, UnknownModule) {
    Verifier v(ExperimentConfig{});
    EXPECT_THROW(run_verify(v, "widgets"), ValidationError);
}
