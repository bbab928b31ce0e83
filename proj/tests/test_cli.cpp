/* Copyright 2026 The admeasures Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "admeasures/io.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace admeasures;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Two small tables and a config that runs a reduced grid on them.
fs::path make_project(const std::string& name) {
    const auto dir = testsupport::scratch_dir(name);
    fs::create_directories(dir / "raw");
    write_table(dir / "raw" / "alpha.csv", synth_multiclass_table("alpha", {60, 20, 20}, 2, 4.0, 1));
    write_table(dir / "raw" / "beta.csv", synth_multiclass_table("beta", {60, 25}, 3, 3.0, 2));
    write_file_atomic(dir / "grid.cfg",
                      "# reduced grid\n"
                      "benchmarks = cache\n"
                      "out = run\n"
                      "seed = 4\n"
                      "repetitions = 2\n"
                      "volume_samples = 500\n"
                      "precision_rounds = 2\n"
                      "contaminations = 0, 0.05\n"
                      "detector = knn variant=kappa,gamma k=1,3\n"
                      "detector = iforest n_trees=10 subsample=32\n");
    return dir;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
    return files;
}

}  // namespace

TEST_CASE("detector lines expand to the cartesian product") {
    const auto specs = cli::expand_detector_line("knn variant=kappa,gamma k=1,5");
    REQUIRE(specs.size() == 4);
    CHECK(specs[0].params() == "variant=kappa;k=1");
    CHECK(specs[1].params() == "variant=kappa;k=5");
    CHECK(specs[2].params() == "variant=gamma;k=1");
    CHECK(specs[3].params() == "variant=gamma;k=5");
    CHECK(cli::expand_detector_line("lof k=10,20").size() == 2);
    CHECK_THROWS_AS(cli::expand_detector_line("knn k=0"), cli::UsageError);
    CHECK_THROWS_AS(cli::expand_detector_line("svm nu=0.1"), cli::UsageError);
}

TEST_CASE("config entries resolve paths against the config directory") {
    const auto dir = testsupport::scratch_dir("cli_config");
    write_file_atomic(dir / "a.cfg", "benchmarks = data\nout = /abs/out\nalphas = 0.1, 0.02\n");
    cli::RunSettings s;
    cli::apply_config(cli::read_config_file(dir / "a.cfg"), dir, s);
    CHECK(s.benchmarks == (dir / "data").lexically_normal());
    CHECK(s.out == fs::path("/abs/out"));
    CHECK(s.grid.alphas == std::vector<double>{0.1, 0.02});
    write_file_atomic(dir / "b.cfg", "colour = blue\n");
    CHECK_THROWS_AS(cli::apply_config(cli::read_config_file(dir / "b.cfg"), dir, s), cli::UsageError);
}

TEST_CASE("manifest hash is stable and ignores the worker count") {
    cli::RunSettings a;
    a.grid.detectors = default_detector_grid();
    cli::RunSettings b = a;
    b.workers = 8;
    CHECK(cli::manifest_text(a) == cli::manifest_text(b));
    const auto h = cli::manifest_hash(cli::manifest_text(a));
    CHECK(h.size() == 16);
    CHECK(h == cli::manifest_hash(cli::manifest_text(a)));
    b.grid.master_seed = 1;
    CHECK(cli::manifest_hash(cli::manifest_text(b)) != h);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(invoke({}).code == cli::kUsage);
    CHECK(invoke({"frobnicate"}).code == cli::kUsage);
    CHECK(invoke({"run", "--config", "/nonexistent/grid.cfg"}).code == cli::kUsage);
    CHECK(invoke({"aggregate", "rank", "--out", "/nonexistent"}).code == cli::kUsage);
}

TEST_CASE("prepare validates inputs and is idempotent") {
    const auto dir = make_project("cli_prepare");
    const auto first = invoke({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "cache").string()});
    REQUIRE(first.code == cli::kSuccess);
    CHECK(fs::exists(dir / "cache" / "alpha" / "c1" / "normal.csv"));
    CHECK(fs::exists(dir / "cache" / "beta" / "c1" / "anomaly.csv"));
    const auto again = invoke({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "cache").string()});
    CHECK(again.code == cli::kSuccess);
    CHECK(again.out.find("up to date") != std::string::npos);

    fs::create_directories(dir / "busy");
    write_file_atomic(dir / "busy" / "keep.txt", "x");
    CHECK(invoke({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "busy").string()}).code ==
          cli::kUsage);

    fs::create_directories(dir / "bad");
    write_file_atomic(dir / "bad" / "t.csv", "x1,class\n1,a\nzz,b\n");
    const auto bad = invoke({"prepare", "--input", (dir / "bad").string(), "--output", (dir / "out2").string()});
    CHECK(bad.code == cli::kUsage);
    CHECK(bad.err.find("t.csv:3") != std::string::npos);
}

TEST_CASE("run, aggregate and rerun") {
    const auto dir = make_project("cli_run");
    REQUIRE(invoke({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "cache").string()}).code == 0);
    const auto cfg = (dir / "grid.cfg").string();
    const auto first = invoke({"run", "--config", cfg, "--quiet"});
    REQUIRE(first.code == cli::kSuccess);
    const auto run_dir = dir / "run";
    CHECK(fs::exists(run_dir / "manifest.txt"));
    CHECK(fs::exists(run_dir / "means.csv"));
    CHECK(read_file(run_dir / "manifest.txt").rfind("# manifest ", 0) == 0);

    for (const std::vector<std::string> extra : {std::vector<std::string>{"rank"}, {"rank", "--mode", "mean"},
                                                 {"kendall"}, {"loss"}, {"multiclass"}}) {
        std::vector<std::string> args{"aggregate"};
        args.insert(args.end(), extra.begin(), extra.end());
        args.insert(args.end(), {"--out", run_dir.string()});
        const auto r = invoke(args);
        CHECK(r.code == cli::kSuccess);
    }
    const auto tables = snapshot(run_dir / "tables");
    CHECK(tables.size() == 10);
    for (const auto& [name, body] : tables) CHECK(body.rfind("# manifest ", 0) == 0);

    const auto before = snapshot(run_dir);
    const auto rerun = invoke({"run", "--config", cfg, "--quiet", "--workers", "3"});
    CHECK(rerun.code == cli::kSuccess);
    CHECK(snapshot(run_dir) == before);

    const auto clash = invoke({"run", "--config", cfg, "--quiet", "--seed", "9"});
    CHECK(clash.code == cli::kUsage);
    CHECK(snapshot(run_dir) == before);
}

TEST_CASE("kendall needs at least two combos") {
    const auto dir = make_project("cli_single");
    write_file_atomic(dir / "grid.cfg", "benchmarks = cache\nout = run\nrepetitions = 1\nvolume_samples = 200\n"
                                        "contaminations = 0\ndetector = knn variant=gamma k=3\n");
    REQUIRE(invoke({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "cache").string()}).code == 0);
    REQUIRE(invoke({"run", "--config", (dir / "grid.cfg").string(), "--quiet"}).code == 0);
    const auto r = invoke({"aggregate", "kendall", "--out", (dir / "run").string()});
    CHECK(r.code == cli::kUsage);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("scores evaluate reads label and score files") {
    const auto dir = testsupport::scratch_dir("cli_scores");
    write_file_atomic(dir / "labels.csv", "id,label\na,0\nb,0\nc,1\nd,1\n");
    write_file_atomic(dir / "scores.csv", "id,score\nd,0.8\nc,0.35\nb,0.4\na,0.1\n");
    const auto r = invoke({"scores", "evaluate", "--labels", (dir / "labels.csv").string(), "--scores",
                           (dir / "scores.csv").string(), "--alphas", "0.5"});
    REQUIRE(r.code == cli::kSuccess);
    CHECK(r.out.find("auc,0.75") != std::string::npos);
    write_file_atomic(dir / "short.csv", "id,score\na,0.1\n");
    CHECK(invoke({"scores", "evaluate", "--labels", (dir / "labels.csv").string(), "--scores",
                  (dir / "short.csv").string()})
              .code == cli::kUsage);
}
