#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "fsnt/detectd.hpp"
#include "fsnt/error.hpp"
#include "fsnt/flowdata.hpp"
#include "fsnt/trafficgen.hpp"
#include "support/fixtures.hpp"

using namespace fsnt;
using nlohmann::json;

namespace {

struct CliRun {
    int status = 0;
    std::string out;
    std::string err;
};

CliRun cli(const std::vector<std::string>& args, const CliHooks* hooks = nullptr) {
    std::ostringstream out, err;
    const int status = run_cli(args, out, err, hooks);
    return {status, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small labeled corpus, written once per temp dir.
std::string corpus(fixture::TempDir& tmp) {
    const auto path = tmp.file("corpus.csv");
    if (!std::filesystem::exists(path)) {
        const auto r = cli({"generate", "--out", path, "--seed", "5", "--counts", "150,150,150,150"});
        EXPECT_EQ(r.status, 0) << r.err;
    }
    return path;
}

}  // namespace

TEST(Cli, GenerateWritesDefaultCorpus) {
    fixture::TempDir tmp;
    const auto path = tmp.file("flows.csv");
    const auto r = cli({"--json", "generate", "--out", path});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["records"], 97000);
    EXPECT_EQ(j["class_counts"]["BENIGN"], 16000);
    const auto d = load_csv(path, SchemaMode::ProjectToCanonical);
    EXPECT_EQ(d.size(), 97000u);
    EXPECT_TRUE(d.labeled());
}

TEST(Cli, UsageErrors) {
    EXPECT_NE(cli({}).status, 0);
    EXPECT_NE(cli({"generate"}).status, 0);
    EXPECT_NE(cli({"train", "--in", "/nonexistent.csv", "--out", "x"}).status, 0);
}

TEST(Cli, TrainRejectsUnlabeledInputAndLargeK) {
    fixture::TempDir tmp;
    const auto labeled = load_csv(corpus(tmp), SchemaMode::ProjectToCanonical);
    Dataset unlabeled(labeled.schema(), false);
    for (std::size_t i = 0; i < labeled.size(); ++i) unlabeled.add(labeled.row(i), std::nullopt);
    write_csv(unlabeled, tmp.file("unlabeled.csv"));

    auto r = cli({"train", "--in", tmp.file("unlabeled.csv"), "--out", tmp.file("m.fsnt")});
    EXPECT_EQ(r.status, exit_code_for(ErrorCode::NotLabeled)) << r.err;
    EXPECT_FALSE(std::filesystem::exists(tmp.file("m.fsnt")));

    r = cli({"train", "--in", corpus(tmp), "--out", tmp.file("m.fsnt"), "--k", "25"});
    EXPECT_EQ(r.status, exit_code_for(ErrorCode::KTooLarge)) << r.err;

    r = cli({"train", "--in", corpus(tmp), "--out", tmp.file("m.fsnt"), "--hp", "depth"});
    EXPECT_EQ(r.status, exit_code_for(ErrorCode::InvalidHyperparameter)) << r.err;
}

TEST(Cli, TrainEvaluateAndJsonOutput) {
    fixture::TempDir tmp;
    const auto model = tmp.file("dt.fsnt");
    auto r = cli({"--json", "train", "--in", corpus(tmp), "--model", "DT", "--out", model, "--no-timing"});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["command"], "train");
    EXPECT_EQ(j["model"], "DT");
    EXPECT_GT(j["accuracy"].get<double>(), 0.9);
    EXPECT_TRUE(std::filesystem::exists(model));

    r = cli({"--json", "evaluate", "--model", model, "--in", corpus(tmp), "--no-timing"});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_GT(json::parse(r.out)["accuracy"].get<double>(), 0.9);
}

TEST(Cli, NoTimingReportsAreByteIdentical) {
    fixture::TempDir tmp;
    for (const char* dir : {"a", "b"}) {
        const auto r = cli({"compare", "--in", corpus(tmp), "--models", "DT,NB,LR", "--no-timing", "--report-dir",
                            tmp.file(dir)});
        ASSERT_EQ(r.status, 0) << r.err;
    }
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(tmp.file("a"))) {
        const auto name = e.path().filename().string();
        EXPECT_EQ(slurp(e.path().string()), slurp(tmp.file("b/" + name))) << name;
        ++files;
    }
    EXPECT_GE(files, 4u);
}

TEST(Cli, PreprocessAndSelectFeatures) {
    fixture::TempDir tmp;
    auto r = cli({"--json", "preprocess", "--in", corpus(tmp), "--out", tmp.file("clean.csv"), "--report-dir",
                  tmp.file("rep")});
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(json::parse(r.out)["records_out"], load_csv(tmp.file("clean.csv"), SchemaMode::ProjectToCanonical).size());
    EXPECT_TRUE(std::filesystem::exists(tmp.file("rep/correlation.csv")));

    r = cli({"--json", "select-features", "--in", tmp.file("clean.csv"), "--k", "5", "--ranking-out",
             tmp.file("rank.csv"), "--out", tmp.file("pcs.csv")});
    ASSERT_EQ(r.status, 0) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j["ranking"].size(), 24u);
    EXPECT_EQ(j["explained_variance"].size(), 5u);
    EXPECT_EQ(load_csv(tmp.file("pcs.csv"), SchemaMode::Strict, FeatureSchema({"PC1"})).width(), 5u);

    r = cli({"select-features", "--in", tmp.file("clean.csv"), "--k", "25"});
    EXPECT_EQ(r.status, exit_code_for(ErrorCode::KTooLarge));
}

TEST(Cli, ServeFailsWithoutModelFile) {
    const auto r = cli({"serve", "--listen", "127.0.0.1:0", "--model", "/nonexistent/model.fsnt"});
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST(Cli, ServeAndReplay) {
    fixture::TempDir tmp;
    const auto model = tmp.file("rf.fsnt");
    ASSERT_EQ(cli({"train", "--in", corpus(tmp), "--model", "RF", "--hp", "trees=20", "--out", model}).status, 0);
    GeneratorSpec g;
    g.counts = {25, 25, 25, 25};
    g.seed = 77;
    write_csv(generate_dataset(g), tmp.file("replay.csv"));

    CliRun replayed;
    CliHooks hooks;
    hooks.serve_started = [&](HttpServer& server, int port) {
        replayed = cli({"--json", "replay", "--target", "127.0.0.1:" + std::to_string(port), "--in",
                        tmp.file("replay.csv"), "--rate", "2000"});
        server.stop();
    };
    const auto served = cli({"serve", "--listen", "127.0.0.1:0", "--model", model}, &hooks);
    EXPECT_EQ(served.status, 0) << served.err;
    EXPECT_NE(served.out.find("with RF model"), std::string::npos);
    ASSERT_EQ(replayed.status, 0) << replayed.err;
    const auto j = json::parse(replayed.out);
    EXPECT_EQ(j["sent"], 100);
    EXPECT_EQ(j["responses"], 100);
}

TEST(Cli, ReplayAgainstClosedPortFails) {
    const auto r = cli({"replay", "--target", "127.0.0.1:1", "--counts", "2,2,2,2", "--timeout", "2"});
    EXPECT_EQ(r.status, exit_code_for(ErrorCode::ConnectionFailure));
}
