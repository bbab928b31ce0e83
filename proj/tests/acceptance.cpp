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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "admeasures/curves.hpp"
#include "admeasures/experiments.hpp"
#include "admeasures/io.hpp"
#include "admeasures/thresholded.hpp"
#include "admeasures/volume.hpp"
#include "cli.hpp"
#include "support.hpp"

using namespace admeasures;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Verdict()>& body) {
    Verdict v;
    const auto start = Clock::now();
    try {
        v = body();
    } catch (const std::exception& e) {
        v.pass = false;
        v.detail = std::string("exception: ") + e.what();
    }
    char timing[32];
    std::snprintf(timing, sizeof timing, "%.2fs", seconds_since(start));
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << title << " [" << timing << "]";
    if (!v.detail.empty()) std::cout << " -- " << v.detail;
    std::cout << std::endl;
    if (!v.pass) ++failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double max_norm(std::span<const double> x) {
    double m = 0.0;
    for (const double v : x) m = std::max(m, std::abs(v));
    return m;
}

std::vector<BenchmarkDataset> grid_benchmarks() {
    return make_benchmarks(synth_multiclass_table("blobs", {150, 50, 50}, 2, 3.0, 11));
}

GridConfig small_grid() {
    GridConfig cfg;
    cfg.detectors = {parse_detector_spec("knn", "variant=gamma;k=1"), parse_detector_spec("knn", "variant=gamma;k=9"),
                     parse_detector_spec("lof", "k=10"), parse_detector_spec("iforest", "n_trees=20;subsample=64")};
    cfg.repetitions = 3;
    cfg.volume_samples = 2000;
    cfg.precision_rounds = 3;
    cfg.master_seed = 5;
    return cfg;
}

Verdict auc_oracle() {
    Verdict v;
    std::mt19937_64 rng(1001);
    double worst = 0.0;
    const auto start = Clock::now();
    for (int trial = 0; trial < 500; ++trial) {
        const auto in = testsupport::random_instance(rng, 200, 2 + trial % 20);
        const double diff = std::abs(auc(build_roc(testsupport::to_labeled(in))) - testsupport::pairwise_auc(in));
        worst = std::max(worst, diff);
    }
    const double t = seconds_since(start);
    v.require(worst <= 1e-12, "max |AUC - oracle| = " + fmt(worst));
    v.require(t < 5.0, "runtime " + fmt(t) + "s");
    v.detail = v.pass ? "max |AUC - oracle| = " + fmt(worst) : v.detail;
    return v;
}

Verdict identities() {
    Verdict v;
    const auto start = Clock::now();
    std::mt19937_64 rng(1002);
    const std::vector<double> alphas{0.001, 0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 0.9, 1.0};
    for (int trial = 0; trial < 500; ++trial) {
        const auto in = testsupport::random_instance(rng, 200, trial % 2 ? 6 : 0);
        const auto curve = build_roc(testsupport::to_labeled(in));
        const double a = auc(curve);
        v.require(auc_at(curve, 1.0, false) == a, "auc_at(1) != auc");
        v.require(auc_weighted(curve) >= a - 1e-12, "AUC_w < AUC");
        double prev = -1.0;
        for (const double alpha : alphas) {
            const double t = tpr_at(curve, alpha);
            v.require(t >= prev, "tpr_at not monotone");
            prev = t;
        }
    }

    const SamplingBox box{{-1.0, -1.0}, {1.0, 1.0}};
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = testsupport::random_instance(rng, 100, 0);
        const std::vector<double> levels{0.05, 0.2, 0.6};
        for (const auto& e : mc_volume_at_fprs(max_norm, box, testsupport::to_labeled(in), levels, 3000,
                                               static_cast<std::uint64_t>(trial))) {
            v.require(e.vol + e.cvol == 1.0, "vol + cvol != 1");
        }
    }

    const auto grid = run_grid(small_grid(), grid_benchmarks()).records;
    const auto loss = loss_matrix(grid, 0.0);
    const auto tau = kendall_matrix(grid, 0.0);
    for (std::size_t i = 0; i < loss.measures.size(); ++i) {
        v.require(loss.values[i][i] == 0.0, "loss diagonal nonzero");
        v.require(tau.values[i][i] == 1.0, "kendall diagonal != 1");
        for (std::size_t j = 0; j < loss.measures.size(); ++j) {
            const bool both_nan = std::isnan(tau.values[i][j]) && std::isnan(tau.values[j][i]);
            v.require(both_nan || tau.values[i][j] == tau.values[j][i], "kendall not symmetric");
        }
    }
    const double t = seconds_since(start);
    v.require(t < 10.0, "runtime " + fmt(t) + "s");
    return v;
}

Verdict volume_accuracy() {
    Verdict v;
    const auto start = Clock::now();
    const SamplingBox box{{-1.0, -1.0}, {1.0, 1.0}};
    // Normal scores {0.2, 0.5}: the threshold at FPR 0.5 is 0.5, so the
    // accept region is the square of half-width 0.5.
    const LabeledScores data({0, 0, 1}, {0.5, 0.2, 0.9});
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto e = mc_volume_at_fpr(max_norm, box, data, 0.5, 100000, seed);
        v.require(e.threshold == 0.5, "threshold " + fmt(e.threshold));
        worst = std::max(worst, std::abs(e.vol - 0.25));
    }
    const double t = seconds_since(start);
    v.require(worst <= 0.005, "max |vol - 0.25| = " + fmt(worst));
    v.require(t < 10.0, "runtime " + fmt(t) + "s");
    if (v.pass) v.detail = "max |vol - 0.25| = " + fmt(worst);
    return v;
}

Verdict degenerate_detector() {
    Verdict v;
    // 1000 normals, 100 anomalies. The top 10% of normals outscore every
    // anomaly; the anomalies outscore the remaining normals.
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < 1000; ++i) {
        labels.push_back(0);
        scores.push_back(i < 100 ? 10.0 + i : -1.0 - i);
    }
    for (int i = 0; i < 100; ++i) {
        labels.push_back(1);
        scores.push_back(static_cast<double>(i) / 100.0);
    }
    const auto curve = build_roc(LabeledScores(labels, scores));
    const double a = auc(curve);
    const double tpr = tpr_at(curve, 0.01);
    const double partial = auc_at(curve, 0.05, true);
    v.require(a >= 0.85, "AUC = " + fmt(a));
    v.require(tpr == 0.0, "TPR@0.01 = " + fmt(tpr));
    v.require(partial <= 0.15, "AUC@0.05 = " + fmt(partial));
    if (v.pass) v.detail = "AUC = " + fmt(a) + ", TPR@0.01 = " + fmt(tpr) + ", AUC@0.05 = " + fmt(partial);
    return v;
}

Verdict precision_normalization() {
    Verdict v;
    std::mt19937_64 rng(1005);
    std::normal_distribution<double> g(0.0, 1.0);
    // One fixed population; the doubled set adds anomalies to the same data.
    std::vector<double> normals(20000), anomalies(4000);
    for (auto& x : normals) x = g(rng);
    for (auto& x : anomalies) x = g(rng) + 2.0;
    const auto make = [&](std::size_t n_anomaly) {
        std::vector<int> labels(normals.size(), 0);
        std::vector<double> scores = normals;
        labels.resize(normals.size() + n_anomaly, 1);
        scores.insert(scores.end(), anomalies.begin(), anomalies.begin() + static_cast<std::ptrdiff_t>(n_anomaly));
        return LabeledScores(labels, scores);
    };
    const double single = precision_at_p(make(2000), {0.05, 1000, 7}).value;
    const double doubled = precision_at_p(make(4000), {0.05, 1000, 7}).value;
    v.require(std::abs(single - doubled) <= 0.02,
              "precision@0.05 " + fmt(single) + " vs " + fmt(doubled));
    if (v.pass) v.detail = fmt(single) + " vs " + fmt(doubled);
    return v;
}

Verdict detector_values() {
    Verdict v;
    Matrix line(0, 1);
    for (const double x : {0.0, 1.0, 2.0}) line.append_row(std::vector<double>{x});
    const std::vector<double> q{3.0};
    v.require(KnnModel(line, 2, KnnVariant::kappa).score(q) == 2.0, "kappa");
    v.require(KnnModel(line, 2, KnnVariant::gamma).score(q) == 1.5, "gamma");
    v.require(KnnModel(line, 2, KnnVariant::delta).score(q) == 1.5, "delta");

    Matrix tri(0, 2);
    tri.append_row(std::vector<double>{0.0, 0.0});
    tri.append_row(std::vector<double>{1.0, 0.0});
    tri.append_row(std::vector<double>{0.5, std::sqrt(3.0) / 2.0});
    const double lof = LofModel(tri, 2).score(std::vector<double>{0.0, 0.0});
    v.require(std::abs(lof - 1.0) <= 1e-9, "LOF = " + fmt(lof));

    std::mt19937_64 rng(1006);
    std::normal_distribution<double> g(0.0, 0.5);
    Matrix clusters(0, 2);
    for (int i = 0; i < 200; ++i) {
        const double cx = i % 2 ? 5.0 : 0.0;
        clusters.append_row(std::vector<double>{cx + g(rng), cx + g(rng)});
    }
    const auto forest = IsolationForestModel::fit(clusters, {100, 256, 42});
    const auto all = forest.score_batch(clusters);
    for (const double s : all) v.require(s > 0.0 && s < 1.0, "IF score " + fmt(s) + " outside (0, 1)");
    const double inlier = forest.score(std::vector<double>{0.0, 0.0});
    const double outlier = forest.score(std::vector<double>{2.5, 12.0});
    v.require(outlier > inlier, "IF outlier " + fmt(outlier) + " <= inlier " + fmt(inlier));
    return v;
}

Verdict protocol_invariants() {
    Verdict v;
    const auto benches = grid_benchmarks();
    const auto cfg = small_grid();
    const auto rs = run_grid(cfg, benches).records;
    const auto col = *rs.measure_index(MeasureId{MeasureKind::auc, 0.0});
    for (const auto& r : rs.records) {
        const auto& bench = *std::find_if(benches.begin(), benches.end(),
                                          [&](const BenchmarkDataset& b) { return b.id() == r.benchmark(); });
        const auto seed = split_seed(cfg.master_seed, bench.table, r.repetition);
        const auto s = split(bench, {cfg.train_fraction, r.contamination, seed});
        const auto spec = parse_detector_spec(r.detector, r.params);
        const auto model = fit_detector(spec, s.train, detector_seed(seed, spec));
        const double a = auc(build_roc(LabeledScores(s.test_labels, model->score_batch(s.test))));
        v.require(r.values[col] == a, "cell " + r.benchmark() + "/" + r.detector + " used a different fold");
    }
    // Same fold indices for every detector of a (benchmark, repetition).
    std::map<std::string, std::vector<std::size_t>> folds;
    for (const auto& bench : benches) {
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            const auto s = split(bench, {cfg.train_fraction, 0.05, split_seed(cfg.master_seed, bench.table, rep)});
            const auto key = bench.id() + "/" + std::to_string(rep);
            if (folds.count(key)) v.require(folds[key] == s.test_normals, "fold changed");
            folds[key] = s.test_normals;
        }
    }
    for (std::size_t n = 40; n <= 3000; n += 53) {
        const auto bench = synth_gaussian(n, n, 2, 2.0, n);
        for (const double c : {0.0, 0.01, 0.05}) {
            const auto s = split(bench, {0.8, c, 9});
            const double n_train = static_cast<double>(s.train_normals.size());
            const double p = static_cast<double>(s.train_anomalies.size());
            const double wanted = c * (n_train + p);
            v.require(std::abs(p - wanted) <= 1.0,
                      "c = " + fmt(c) + ": " + fmt(p) + " anomalies among " + fmt(n_train + p));
        }
    }
    return v;
}

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult cli_call(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
    return files;
}

bool well_formed_csv(const std::string& text, std::size_t min_rows) {
    std::istringstream in(text);
    std::string line;
    std::size_t width = 0, rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
        if (width == 0) width = fields;
        if (fields != width || width < 2) return false;
        ++rows;
    }
    return rows >= min_rows + 1;
}

Verdict end_to_end() {
    Verdict v;
    const auto start = Clock::now();
    const auto dir = testsupport::scratch_dir("acceptance_e2e");
    fs::create_directories(dir / "raw");
    write_table(dir / "raw" / "ring.csv", synth_multiclass_table("ring", {220, 60, 60}, 2, 3.0, 21));
    write_table(dir / "raw" / "pair.csv", synth_multiclass_table("pair", {200, 70}, 3, 2.5, 22));
    write_table(dir / "raw" / "trio.csv", synth_multiclass_table("trio", {210, 50, 50, 50}, 4, 3.5, 23));

    std::ostringstream cfg;
    cfg << "benchmarks = cache\nout = run\nseed = 7\nrepetitions = 3\nvolume_samples = 2000\n"
        << "precision_rounds = 10\ncontaminations = 0, 0.01, 0.05\n"
        << "detector = knn variant=kappa,gamma,delta k=1,3,5,7,9,13,21,31,51\n"
        << "detector = lof k=10,20,50\n"
        << "detector = iforest n_trees=50,100,200\n";
    write_file_atomic(dir / "grid.cfg", cfg.str());

    const auto prep = cli_call({"prepare", "--input", (dir / "raw").string(), "--output", (dir / "cache").string()});
    v.require(prep.code == 0, "prepare exit " + std::to_string(prep.code) + ": " + prep.err);
    const auto run = cli_call({"run", "--config", (dir / "grid.cfg").string(), "--quiet"});
    v.require(run.code == 0, "run exit " + std::to_string(run.code) + ": " + run.err);

    const auto run_dir = (dir / "run").string();
    for (const std::string kind : {"rank", "kendall", "loss", "multiclass"}) {
        for (const std::string c : {"0", "0.05"}) {
            const auto r = cli_call({"aggregate", kind, "--out", run_dir, "--contamination", c});
            v.require(r.code == 0, kind + " exit " + std::to_string(r.code) + ": " + r.err);
        }
    }
    const auto tables = snapshot(dir / "run" / "tables");
    v.require(tables.size() == 16, std::to_string(tables.size()) + " table files");
    for (const auto& [name, body] : tables) {
        v.require(body.rfind("# manifest ", 0) == 0, name + " lacks the manifest header");
        if (name.ends_with(".csv")) v.require(well_formed_csv(body, 3), name + " is malformed");
    }
    const auto rank = tables.find("rank_c0.csv");
    v.require(rank != tables.end() && rank->second.find("knn_mean") != std::string::npos &&
                  rank->second.find("lof_mean") != std::string::npos &&
                  rank->second.find("iforest_mean") != std::string::npos,
              "rank table lacks a detector column");

    const auto before = snapshot(dir / "run");
    const auto rerun = cli_call({"run", "--config", (dir / "grid.cfg").string(), "--quiet"});
    v.require(rerun.code == 0, "rerun exit " + std::to_string(rerun.code));
    for (const std::string kind : {"rank", "kendall", "loss", "multiclass"}) {
        for (const std::string c : {"0", "0.05"}) {
            v.require(cli_call({"aggregate", kind, "--out", run_dir, "--contamination", c}).code == 0,
                      "aggregate rerun failed");
        }
    }
    v.require(snapshot(dir / "run") == before, "rerun changed output bytes");

    // A fresh output directory reproduces the same bytes.
    const auto fresh = cli_call({"run", "--config", (dir / "grid.cfg").string(), "--quiet", "--out",
                                 (dir / "run2").string(), "--workers", "2"});
    v.require(fresh.code == 0, "fresh run exit " + std::to_string(fresh.code));
    const auto strip_header = [](std::map<std::string, std::string> files) {
        for (auto& [name, body] : files) body = body.substr(body.find('\n') + 1);
        return files;
    };
    // Headers carry the manifest hash, which includes the output path.
    const auto a = strip_header(snapshot(dir / "run" / "records"));
    const auto b = strip_header(snapshot(dir / "run2" / "records"));
    v.require(a.size() == 18 && a == b, "fresh run records differ");

    const double t = seconds_since(start);
    v.require(t < 300.0, "pipeline took " + fmt(t) + "s");
    if (v.pass) v.detail = std::to_string(a.size()) + " record files, " + std::to_string(tables.size()) + " tables";
    return v;
}

Verdict roc_band_shape() {
    Verdict v;
    // 250 normals split 200/50, so FPR 0.5 is a knot of every curve.
    const auto bench = synth_gaussian(250, 120, 2, 1.0, 31);
    const auto band = roc_band(parse_detector_spec("knn", "variant=gamma;k=5"), bench, 100, 13);
    v.require(band.curves == 100, std::to_string(band.curves) + " curves");
    const auto first = std::find_if(band.fpr.begin(), band.fpr.end(), [](double f) { return f > 0.0; });
    const auto half = std::find(band.fpr.begin(), band.fpr.end(), 0.5);
    v.require(first != band.fpr.end() && half != band.fpr.end(), "missing knots");
    if (!v.pass) return v;
    const double s_low = band.ratio_std[static_cast<std::size_t>(first - band.fpr.begin())];
    const double s_half = band.ratio_std[static_cast<std::size_t>(half - band.fpr.begin())];
    v.require(s_low > s_half, "std(TPR/FPR) " + fmt(s_low) + " at FPR " + fmt(*first) + " vs " + fmt(s_half));
    if (v.pass) {
        v.detail = "std(TPR/FPR) " + fmt(s_low) + " at FPR " + fmt(*first) + " vs " + fmt(s_half) + " at 0.5";
    }
    return v;
}

}  // namespace

int main() {
    report(1, "AUC equals the pairwise ranking oracle", auc_oracle);
    report(2, "consistency identities", identities);
    report(3, "Monte-Carlo volume accuracy", volume_accuracy);
    report(4, "degenerate detector separates AUC from low-FPR measures", degenerate_detector);
    report(5, "precision@p is insensitive to the anomaly count", precision_normalization);
    report(6, "detector hand values", detector_values);
    report(7, "shared folds and realized contamination", protocol_invariants);
    report(8, "end-to-end pipeline and byte-identical rerun", end_to_end);
    report(9, "ROC ratio spread is largest at low FPR", roc_band_shape);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
