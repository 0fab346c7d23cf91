#include "bladerunner/analyzer.hpp"
#include "bladerunner/error.hpp"
#include "commands.hpp"
#include "fixture_factory.hpp"
#include "stub_server.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

namespace bladerunner {
namespace {

using testing::fixture_spec;
using testing::thirds_layout;

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    RunResult r;
    r.code = cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Ten jittered thirds fixtures at 1024 px.
std::filesystem::path make_corpus(const std::string& tag, int n = 10) {
    const auto dir = testing::scratch_dir(tag);
    std::mt19937_64 rng(41);
    for (int i = 0; i < n; ++i) {
        testing::write_fixture(dir, "c" + std::to_string(i), fixture_spec(testing::jittered_thirds_layout(1024, 1024, 2.0, rng)));
    }
    return dir;
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"fetch", "--source", "http://127.0.0.1:1/x", "--count", "1"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"fetch", "--source", "http://x", "--count", "0", "--out", "/tmp/x"}).code, cli::kUsage);
    EXPECT_EQ(run_cli({"analyze", "--input", "/nonexistent", "--out-csv", "a", "--out-goalposts", "b",
                       "--backend", "fixture:/nonexistent"}).code,
              cli::kUsage);
    EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}

TEST(Cli, FetchExitCodes) {
    {
        testing::StubServer server({{200, "a"}, {200, "b"}, {200, "c"}});
        const auto dir = testing::scratch_dir("cli");
        const auto r = run_cli({"fetch", "--source", server.url(), "--count", "3", "--out", (dir / "out").string(),
                                "--min-interval", "0"});
        EXPECT_EQ(r.code, cli::kOk) << r.err;
        EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir / "out"), {}), 3);
        EXPECT_NE(r.out.find("saved 3 of 3"), std::string::npos);
    }
    {
        testing::StubServer server({{200, "a"}, {500, "oops"}, {200, "c"}});
        const auto dir = testing::scratch_dir("cli");
        const auto r = run_cli({"fetch", "--source", server.url(), "--count", "3", "--out", dir.string(),
                                "--min-interval", "0"});
        EXPECT_EQ(r.code, cli::kPartialFailure);
    }
    {
        testing::StubServer server({{404, ""}});
        const auto dir = testing::scratch_dir("cli");
        const auto r = run_cli({"fetch", "--source", server.url(), "--count", "2", "--out", dir.string(),
                                "--min-interval", "0"});
        EXPECT_EQ(r.code, cli::kTotalFailure);
    }
}

TEST(Cli, AnalyzeWritesCsvAndGoalposts) {
    const auto corpus = make_corpus("cli-corpus");
    const auto out = testing::scratch_dir("cli");
    const std::vector<std::string> args{"analyze", "--input", corpus.string(), "--out-csv", (out / "r.csv").string(),
                                        "--out-goalposts", (out / "gp.json").string(), "--backend",
                                        "fixture:" + corpus.string(), "--ladder", "base2"};
    const auto r = run_cli(args);
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    // 10 samples x 5 rungs plus the header.
    EXPECT_EQ(count_lines(slurp(out / "r.csv")), 51u);
    const GoalPostTable table = read_goalposts(out / "gp.json");
    EXPECT_EQ(table.entries.size(), 5u);
    EXPECT_EQ(table.entries.at({1024, 1024}).n_samples, 10u);
    EXPECT_EQ(table.corpus_description, "bladerunner analyze " + corpus.filename().string());

    const std::string first_csv = slurp(out / "r.csv");
    ASSERT_EQ(run_cli(args).code, cli::kOk);
    EXPECT_EQ(slurp(out / "r.csv"), first_csv);
}

TEST(Cli, AnalyzeEmptyCorpus) {
    const auto dir = testing::scratch_dir("cli");
    std::ofstream(dir / "a.jpg") << "garbage";
    std::ofstream(dir / "b.png") << "garbage";
    const auto r = run_cli({"analyze", "--input", dir.string(), "--out-csv", (dir / "r.csv").string(),
                            "--out-goalposts", (dir / "gp.json").string(), "--backend", "fixture:" + dir.string()});
    EXPECT_EQ(r.code, cli::kEmptyCorpus);
    EXPECT_FALSE(std::filesystem::exists(dir / "gp.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "r.csv"));
}

TEST(Cli, AnalyzeStorageError) {
    const auto corpus = make_corpus("cli-corpus", 2);
    const auto r = run_cli({"analyze", "--input", corpus.string(), "--out-csv", "/nonexistent/dir/r.csv",
                            "--out-goalposts", "/nonexistent/dir/gp.json", "--backend", "fixture:" + corpus.string()});
    EXPECT_EQ(r.code, cli::kStorage);
}

TEST(Cli, DetectExitCodesAndAnnotations) {
    const auto dir = testing::scratch_dir("cli");
    const auto layout = thirds_layout(1024, 1024);
    GoalPostTable table;
    table.created_at = now_seconds();
    table.entries[{1024, 1024}] = {1024, 1024, layout.left_eye, layout.right_eye, {0, 0}, {0, 0}, 5, 2.0};
    write_goalposts(table, dir / "gp.json");

    const auto mixed = dir / "mixed";
    std::filesystem::create_directories(mixed);
    testing::write_fixture(mixed, "synthetic", fixture_spec(layout));
    auto displaced = layout;
    displaced.left_eye.x += 50;
    displaced.right_eye.x += 50;
    testing::write_fixture(mixed, "displaced", fixture_spec(displaced));
    std::ofstream(mixed / "corrupt.jpg") << "not an image";

    const auto r = run_cli({"detect", "--input", mixed.string(), "--goalposts", (dir / "gp.json").string(),
                            "--out-csv", (dir / "v.csv").string(), "--backend", "fixture:" + mixed.string(),
                            "--annotate", (dir / "ann").string()});
    EXPECT_EQ(r.code, cli::kSyntheticFound) << r.err;
    EXPECT_NE(r.out.find("synthetic_likely=1 inconclusive=1 no_detection=1"), std::string::npos) << r.out;
    EXPECT_EQ(count_lines(slurp(dir / "v.csv")), 4u);
    EXPECT_TRUE(std::filesystem::exists(dir / "ann" / "synthetic.png"));
    EXPECT_TRUE(std::filesystem::exists(dir / "ann" / "displaced.png"));
    EXPECT_FALSE(std::filesystem::exists(dir / "ann" / "corrupt.png"));

    const auto authentic = dir / "authentic";
    std::filesystem::create_directories(authentic);
    testing::write_fixture(authentic, "displaced", fixture_spec(displaced));
    const auto clean = run_cli({"detect", "--input", authentic.string(), "--goalposts", (dir / "gp.json").string(),
                                "--out-csv", (dir / "v2.csv").string(), "--backend", "fixture:" + authentic.string()});
    EXPECT_EQ(clean.code, cli::kOk) << clean.err;

    std::ofstream(dir / "bad.json") << R"({"version":1,"entries":[{"width":-4}]})";
    const auto bad = run_cli({"detect", "--input", authentic.string(), "--goalposts", (dir / "bad.json").string(),
                              "--out-csv", (dir / "v3.csv").string(), "--backend", "fixture:" + authentic.string()});
    EXPECT_EQ(bad.code, cli::kDataError);
    EXPECT_FALSE(std::filesystem::exists(dir / "v3.csv"));

    const auto empty = dir / "empty";
    std::filesystem::create_directories(empty);
    EXPECT_EQ(run_cli({"detect", "--input", empty.string(), "--goalposts", (dir / "gp.json").string(), "--out-csv",
                       (dir / "v4.csv").string(), "--backend", "fixture:" + empty.string()})
                  .code,
              cli::kUsage);
}

TEST(Cli, DlibBackendNeedsModel) {
    cli::RunConfig config;
    config.model_path = "/nonexistent/model.dat";
    config.detector_path = "/nonexistent/cascade.xml";
    EXPECT_THROW(cli::make_backend(config), BackendUnavailable);
    config.backend = "magic";
    EXPECT_THROW(cli::make_backend(config), std::runtime_error);
}

TEST(Cli, CollectInputsFiltersAndSorts) {
    const auto dir = testing::scratch_dir("cli");
    for (const char* name : {"b.png", "a.json", "c.jpeg", "notes.txt", "d.JPG"}) std::ofstream(dir / name) << "x";
    std::filesystem::create_directories(dir / "sub");
    std::ofstream(dir / "sub" / "e.png") << "x";
    const auto paths = cli::collect_inputs(dir);
    std::vector<std::string> names;
    for (const auto& p : paths) names.push_back(p.filename().string());
    EXPECT_EQ(names, (std::vector<std::string>{"a.json", "b.png", "c.jpeg", "d.JPG"}));
    EXPECT_EQ(cli::collect_inputs(dir / "b.png").size(), 1u);
}

}  // namespace
}  // namespace bladerunner
