// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end runs of the command-line tool.

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kCli = REVUNET_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
    static fs::path dir() {
        static const fs::path d = fs::temp_directory_path() / ("revunet_cli_" + std::to_string(::getpid()));
        return d;
    }
    static void SetUpTestSuite() { fs::create_directories(dir()); }
    static void TearDownTestSuite() { fs::remove_all(dir()); }

    // Runs the tool with stdout to `stdout_file` (inside dir()) and returns the exit code.
    static int run(const std::string& args, const std::string& stdout_file = "out.txt") {
        const std::string cmd = kCli.string() + " " + args + " > " + (dir() / stdout_file).string() + " 2> " +
                                (dir() / "err.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static json read_json(const fs::path& p) { return json::parse(slurp(p)); }
};

}  // namespace

TEST_F(Cli, GradcheckPassesAndReportsJson) {
    ASSERT_EQ(run("gradcheck --preset toy --seed 3", "gc.json"), 0) << slurp(dir() / "err.txt");
    const auto j = read_json(dir() / "gc.json");
    EXPECT_TRUE(j.at("pass").get<bool>());
    EXPECT_GE(j.at("checks").size(), 4u);
}

TEST_F(Cli, InjectedFaultsAreCaught) {
    for (const char* op : {"conv3d", "pointwise", "depthwise", "group_norm", "relu", "maxpool", "upsample"}) {
        EXPECT_EQ(run(std::string("gradcheck --preset toy --seed 1 --fd-samples 50 --inject-fault ") + op), 1) << op;
        EXPECT_NE(slurp(dir() / "err.txt").find("FAIL"), std::string::npos) << op;
    }
}

TEST_F(Cli, UsageErrorsExitWithTwo) {
    EXPECT_EQ(run("gradcheck --preset toy"), 2);  // no seed
    EXPECT_EQ(run("memplan --preset toy --budget 12XB"), 2);
    EXPECT_EQ(run("memplan --preset nonexistent"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    {
        std::ofstream(dir() / "odd.json") << R"({"preset": "toy", "widths": [3, 8]})";
    }
    EXPECT_EQ(run("gradcheck --seed 1 --config " + (dir() / "odd.json").string()), 2);
    EXPECT_EQ(run("gradcheck --seed 1 --config " + (dir() / "missing.json").string()), 2);
}

TEST_F(Cli, MemplanEstimateAndBudget) {
    ASSERT_EQ(run("memplan --preset mbconv-base", "mp.json"), 0);
    const auto j = read_json(dir() / "mp.json");
    EXPECT_LE(j.dump().size(), 10'000'000u);
    ASSERT_EQ(run("memplan --preset mbconv-base --budget 14GB --axis volume", "mpb.json"), 0) << slurp(dir() / "err.txt");
    const auto b = read_json(dir() / "mpb.json").at("search");
    EXPECT_FALSE(b.at("store-all").at("feasible").get<bool>());
    EXPECT_TRUE(b.at("reversible").at("feasible").get<bool>());
    EXPECT_GE(b.at("reversible").at("scale").get<double>(), 1.0);
    EXPECT_TRUE(b.at("ratio").is_null());
    ASSERT_EQ(run("memplan --preset mbconv-base --claims", "claims.json"), 0);
    EXPECT_NE(slurp(dir() / "claims.json").find("activation_ratio"), std::string::npos);
}

TEST_F(Cli, PhantomsTrainAndSegmentAgree) {
    const fs::path data = dir() / "data", run_dir = dir() / "run";
    ASSERT_EQ(run("make-phantoms --seed 4 --count 4 --size 16 --out " + data.string()), 0) << slurp(dir() / "err.txt");
    {
        std::ofstream(dir() / "tiny.json") << R"({"preset": "toy", "image_size": [16, 16, 16]})";
    }
    const std::string train_args = "train --config " + (dir() / "tiny.json").string() + " --data " + data.string() +
                                   " --epochs 2 --holdout 1 --seed 5 --out ";
    ASSERT_EQ(run(train_args + run_dir.string()), 0) << slurp(dir() / "err.txt");
    const auto summary = read_json(run_dir / "summary.json");
    EXPECT_EQ(summary.at("steps").get<std::size_t>(), 6u);
    EXPECT_EQ(summary.at("holdout_count").get<std::size_t>(), 1u);

    // The holdout split takes the last corpus entry.
    ASSERT_EQ(run("segment --model " + (run_dir / "model").string() + " --volume " +
                      (data / "phantom_0003_volume.rvt").string() + " --labels " +
                      (data / "phantom_0003_labels.rvt").string(),
                  "seg.json"),
              0)
        << slurp(dir() / "err.txt");
    const auto seg = read_json(dir() / "seg.json");
    EXPECT_NEAR(seg.at("mean_dice").get<double>(), summary.at("final_holdout_mean_dice").get<double>(), 1e-6);

    // Same seed, same trajectory.
    ASSERT_EQ(run(train_args + (dir() / "run2").string()), 0);
    EXPECT_EQ(slurp(run_dir / "metrics.jsonl"), slurp(dir() / "run2" / "metrics.jsonl"));
}

TEST_F(Cli, EnsembleSelect) {
    const fs::path data = dir() / "edata";
    ASSERT_EQ(run("make-phantoms --seed 8 --count 1 --size 16 --out " + data.string()), 0);
    json stats = {{"dice", {{0.9, 0.2}, {0.3, 0.8}}}, {"train_histograms", {std::vector<int>(64, 1), std::vector<int>(64, 0)}}};
    stats["train_histograms"][1][60] = 100;
    {
        std::ofstream(dir() / "stats.json") << stats.dump();
    }
    const std::string base =
        "ensemble-select --stats " + (dir() / "stats.json").string() + " --volume " + (data / "phantom_0000_volume.rvt").string();
    ASSERT_EQ(run(base + " --reading literal", "lit.json"), 0) << slurp(dir() / "err.txt");
    ASSERT_EQ(run(base + " --reading similarity", "sim.json"), 0);
    const auto lit = read_json(dir() / "lit.json"), sim = read_json(dir() / "sim.json");
    EXPECT_EQ(lit.at("distances"), sim.at("distances"));
    // Recompute both objectives from the reported distances.
    const auto d = lit.at("distances").get<std::vector<double>>();
    ASSERT_EQ(d.size(), 2u);
    const double l0 = 0.9 * d[0] + 0.2 * d[1], l1 = 0.3 * d[0] + 0.8 * d[1];
    EXPECT_EQ(lit.at("model_index").get<std::size_t>(), l1 < l0 ? 1u : 0u);
    const double s0 = 0.9 / (d[0] + 1e-6) + 0.2 / (d[1] + 1e-6), s1 = 0.3 / (d[0] + 1e-6) + 0.8 / (d[1] + 1e-6);
    EXPECT_EQ(sim.at("model_index").get<std::size_t>(), s1 > s0 ? 1u : 0u);
}
