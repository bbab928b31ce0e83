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

#include "cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "admeasures/curves.hpp"
#include "admeasures/io.hpp"
#include "admeasures/thresholded.hpp"

namespace admeasures::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string level_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> parse_levels(const std::string& text, const std::string& key) {
    std::vector<double> out;
    for (const auto& f : split_fields(text, ',')) {
        const auto t = trim(f);
        if (t.empty()) continue;
        const double v = parse_double(t, key);
        if (!std::isfinite(v)) throw UsageError(key + ": '" + t + "' is not a number");
        out.push_back(v);
    }
    if (out.empty()) throw UsageError(key + ": empty list");
    return out;
}

std::string join_levels(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_exact(v[i]);
    return s;
}

unsigned long long parse_count(const std::string& text, const std::string& key) {
    const auto t = trim(text);
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos) {
        throw UsageError(key + ": expected a nonnegative integer, got '" + t + "'");
    }
    return std::stoull(t);
}

bool parse_bool(const std::string& text, const std::string& key) {
    const auto t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw UsageError(key + ": expected true or false, got '" + t + "'");
}

std::string header_line(const std::string& hash) { return "# manifest " + hash + "\n"; }

void write_output(const fs::path& path, const std::string& hash, const std::string& body) {
    write_file_atomic(path, header_line(hash) + body);
}

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

void set_workers(std::size_t workers) { omp_set_num_threads(static_cast<int>(std::max<std::size_t>(1, workers))); }

/// Key-value pairs of a manifest file plus its recorded hash.
struct Manifest {
    std::string hash;
    std::map<std::string, std::string> values;
};

Manifest read_manifest(const fs::path& run_dir) {
    const auto path = run_dir / "manifest.txt";
    if (!fs::exists(path)) throw UsageError("no run manifest at " + path.string());
    std::istringstream in(read_file(path));
    Manifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# manifest ", 0) == 0) {
            m.hash = trim(line.substr(11));
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        m.values.emplace(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    if (m.hash.empty()) throw UsageError(path.string() + ": missing manifest hash line");
    return m;
}

// ---------------------------------------------------------------------------
// prepare

std::vector<fs::path> benchmark_dirs(const fs::path& root) {
    std::vector<fs::path> dirs;
    if (!fs::is_directory(root)) return dirs;
    for (const auto& t : fs::directory_iterator(root)) {
        if (!t.is_directory()) continue;
        for (const auto& c : fs::directory_iterator(t.path())) {
            if (c.is_directory() && fs::exists(c.path() / "normal.csv")) dirs.push_back(c.path());
        }
    }
    return dirs;
}

int cmd_prepare(const fs::path& input, const fs::path& output, bool scale, std::ostream& out) {
    if (!fs::is_directory(input)) throw UsageError("input directory not found: " + input.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no tables (*.csv) in " + input.string());

    std::string stamp_body = std::string("admeasures ") + kToolVersion + "\nscale=" + (scale ? "true" : "false") + "\n";
    for (const auto& f : files) stamp_body += f.filename().string() + " " + manifest_hash(read_file(f)) + "\n";
    const std::string stamp = manifest_hash(stamp_body);
    const auto stamp_path = output / "prepare.stamp";

    if (fs::exists(stamp_path) && trim(read_file(stamp_path)) == stamp) {
        out << "benchmark cache " << output.string() << " is up to date (" << benchmark_dirs(output).size()
            << " benchmarks)\n";
        return kSuccess;
    }
    if (fs::exists(output) && !fs::is_empty(output) && !fs::exists(stamp_path)) {
        throw UsageError("refusing to write into non-empty directory " + output.string() +
                         " that is not a benchmark cache");
    }

    // Read and validate everything before touching the output directory.
    std::vector<BenchmarkDataset> benchmarks;
    for (const auto& f : files) {
        RawTable table = read_table(f);
        if (scale) min_max_scale(table);
        try {
            for (auto& b : make_benchmarks(table)) benchmarks.push_back(std::move(b));
        } catch (const std::invalid_argument& e) {
            throw FormatError(f.string() + ": " + e.what());
        }
    }

    for (const auto& dir : benchmark_dirs(output)) fs::remove_all(dir);
    std::ostringstream summary;
    summary << "benchmark,normal,anomaly,contamination,features\n";
    for (const auto& b : benchmarks) {
        save_benchmark(output, b);
        summary << b.id() << ',' << b.normal.rows() << ',' << b.anomaly.rows() << ','
                << format_fixed(b.contamination(), 4) << ',' << b.normal.cols() << '\n';
    }
    write_output(output / "summary.csv", stamp, summary.str());
    write_file_atomic(stamp_path, stamp + "\n");
    out << "prepared " << benchmarks.size() << " benchmarks from " << files.size() << " tables in "
        << output.string() << "\n"
        << summary.str();
    return kSuccess;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const RunSettings& s, std::ostream& out, std::ostream& err) {
    try {
        s.grid.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (s.benchmarks.empty()) throw UsageError("no benchmark cache given (config key 'benchmarks')");
    if (s.out.empty()) throw UsageError("no output directory given (config key 'out')");
    std::vector<BenchmarkDataset> benchmarks;
    try {
        benchmarks = load_benchmark_cache(s.benchmarks);
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
    if (benchmarks.empty()) throw UsageError("benchmark cache " + s.benchmarks.string() + " holds no benchmarks");

    const std::string body = manifest_text(s);
    const std::string hash = manifest_hash(body);
    const std::string manifest = header_line(hash) + body;
    const auto manifest_path = s.out / "manifest.txt";
    if (fs::exists(manifest_path)) {
        if (read_file(manifest_path) != manifest) {
            throw UsageError(s.out.string() + " holds a run with a different manifest; choose another output directory");
        }
    } else {
        write_file_atomic(manifest_path, manifest);
    }

    const auto records_dir = s.out / "records";
    RecordSet records = fs::exists(records_dir) ? read_record_store(records_dir) : RecordSet{};
    set_workers(s.workers);

    std::size_t computed = 0;
    for (const auto& bench : benchmarks) {
        const auto progress = [&](const GridProgress& p) {
            if (s.quiet) return;
            const auto& r = *p.record;
            err << "[" << r.benchmark() << " " << p.done << "/" << p.total << "] " << r.detector << " " << r.params
                << " c=" << level_text(r.contamination) << " rep=" << r.repetition << " " << r.status << "\n";
        };
        auto result = run_grid(s.grid, std::span(&bench, 1), records, progress, Execution::parallel);
        computed += result.new_cells;
        records = std::move(result.records);
        write_record_store(records_dir, records, hash);
    }

    const RecordSet means = repetition_means(records);
    std::vector<std::size_t> rows(means.records.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const std::string means_text = format_records(means, rows, hash);
    if (!fs::exists(s.out / "means.csv") || read_file(s.out / "means.csv") != means_text) {
        write_file_atomic(s.out / "means.csv", means_text);
    }

    std::size_t missing = 0;
    for (const auto& r : records.records) {
        if (r.ok()) continue;
        ++missing;
        err << "missing: " << r.benchmark() << " " << r.detector << " " << r.params << " c="
            << level_text(r.contamination) << " rep=" << r.repetition << ": " << r.status << "\n";
    }
    out << records.records.size() << " cells, " << computed << " computed now, " << missing << " flagged missing\n"
        << "records: " << records_dir.string() << "\n";
    return missing ? kPartial : kSuccess;
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateOptions {
    std::string kind;
    fs::path run_dir;
    double contamination = 0.0;
    std::string mode = "best";
    bool validation = false;
    std::vector<std::string> measures;
    std::optional<double> alpha;
    std::optional<double> p;
    std::string name;
    std::string benchmark;
    std::string detector;
    std::string params;
    std::size_t splits = 100;
    std::size_t workers = 1;
};

bool alpha_kind(MeasureKind k) {
    return k == MeasureKind::auc_at || k == MeasureKind::tpr_at || k == MeasureKind::f1_at ||
           k == MeasureKind::cvol_at;
}

RecordSet project_measures(const RecordSet& in, const AggregateOptions& o) {
    std::set<std::string> names(o.measures.begin(), o.measures.end());
    for (const auto& n : names) MeasureId::parse(n);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < in.measures.size(); ++i) {
        const auto& m = in.measures[i];
        if (!names.empty() && !names.contains(m.name())) continue;
        if (o.alpha && alpha_kind(m.kind) && m.level != *o.alpha) continue;
        if (o.p && m.kind == MeasureKind::precision_at && m.level != *o.p) continue;
        keep.push_back(i);
    }
    if (keep.empty()) throw UsageError("measure selection leaves no measures");
    RecordSet out;
    for (const auto i : keep) out.measures.push_back(in.measures[i]);
    out.records.reserve(in.records.size());
    for (const auto& r : in.records) {
        ExperimentRecord c = r;
        c.values.clear();
        c.validation_values.clear();
        for (const auto i : keep) {
            c.values.push_back(r.values[i]);
            if (!r.validation_values.empty()) c.validation_values.push_back(r.validation_values[i]);
        }
        out.records.push_back(std::move(c));
    }
    return out;
}

std::string default_table_name(const AggregateOptions& o) {
    std::string name = o.kind;
    if (o.kind == "rank" && o.mode == "mean") name += "-mean";
    if (o.kind == "loss" && o.validation) name += "-validation";
    if (o.kind == "rocband") name += "_" + o.benchmark + "_" + o.detector;
    name += "_c" + level_text(o.contamination);
    if (o.alpha) name += "_a" + level_text(*o.alpha);
    if (o.p) name += "_p" + level_text(*o.p);
    return name;
}

int cmd_aggregate(const AggregateOptions& o, std::ostream& out, std::ostream& err) {
    static const std::set<std::string> kinds{"rank", "kendall", "loss", "multiclass", "rocband"};
    if (!kinds.contains(o.kind)) throw UsageError("unknown aggregate kind '" + o.kind + "'");
    const Manifest manifest = read_manifest(o.run_dir);
    const auto tables = o.run_dir / "tables";
    const std::string name = o.name.empty() ? default_table_name(o) : o.name;

    if (o.kind == "rocband") {
        if (o.benchmark.empty() || o.detector.empty()) throw UsageError("rocband needs --benchmark and --detector");
        const auto bench_root = manifest.values.count("benchmarks") ? manifest.values.at("benchmarks") : "";
        const auto seed_text = manifest.values.count("seed") ? manifest.values.at("seed") : "0";
        const auto frac_text = manifest.values.count("train_fraction") ? manifest.values.at("train_fraction") : "0.8";
        const auto benches = load_benchmark_cache(bench_root);
        const auto it = std::find_if(benches.begin(), benches.end(),
                                     [&](const BenchmarkDataset& b) { return b.id() == o.benchmark; });
        if (it == benches.end()) throw UsageError("benchmark '" + o.benchmark + "' not in " + bench_root);
        DetectorSpec spec;
        try {
            spec = parse_detector_spec(o.detector, o.params);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        set_workers(o.workers);
        const auto band = roc_band(spec, *it, o.splits, parse_count(seed_text, "seed"), o.contamination,
                                   parse_double(frac_text, "train_fraction"));
        const std::string csv = format_band_csv(band);
        write_output(tables / (name + ".csv"), manifest.hash, csv);
        out << "roc band over " << band.curves << " splits (" << band.skipped << " skipped), " << band.fpr.size()
            << " knots: " << (tables / (name + ".csv")).string() << "\n";
        return kSuccess;
    }

    const RecordSet records = project_measures(read_record_store(o.run_dir / "records"), o);
    std::string csv;
    std::string text;
    try {
        if (o.kind == "rank") {
            if (o.mode != "best" && o.mode != "mean") throw UsageError("--mode must be best or mean");
            const auto t = mean_rank_table(records, o.contamination,
                                           o.mode == "best" ? RankMode::best_hyperparameter : RankMode::mean_hyperparameter);
            csv = format_rank_csv(t);
            text = format_rank_text(t);
        } else if (o.kind == "kendall") {
            const auto m = kendall_matrix(records, o.contamination);
            csv = format_matrix_csv(m);
            text = format_matrix_text(m, false, true);
        } else if (o.kind == "loss") {
            const auto m = loss_matrix(records, o.contamination, o.validation);
            csv = format_matrix_csv(m);
            text = format_matrix_text(m, true, true);
        } else {
            const auto m = multiclass_sensitivity(records, o.contamination);
            for (const auto& s : m.skipped) err << "skipped " << s << "\n";
            csv = format_matrix_csv(m);
            text = format_matrix_text(m, true, false);
        }
    } catch (const IncompleteRecords& e) {
        err << e.what() << "\n";
        for (const auto& m : e.missing()) err << "missing: " << m << "\n";
        return kPartial;
    }
    write_output(tables / (name + ".csv"), manifest.hash, csv);
    write_output(tables / (name + ".txt"), manifest.hash, text);
    out << text;
    return kSuccess;
}

// ---------------------------------------------------------------------------
// scores and volume

struct SplitOptions {
    fs::path benchmark;
    std::uint64_t seed = 0;
    int repetition = 0;
    double contamination = 0.0;
    double train_fraction = 0.8;
    std::string detector;
    std::string params;
    std::size_t workers = 1;
};

std::string split_manifest(const SplitOptions& o, const std::string& extra) {
    std::ostringstream m;
    m << "version = " << kToolVersion << "\nbenchmark = " << o.benchmark.string() << "\nseed = " << o.seed
      << "\nrepetition = " << o.repetition << "\ncontamination = " << format_exact(o.contamination)
      << "\ntrain_fraction = " << format_exact(o.train_fraction) << "\ndetector = " << o.detector
      << "\nparams = " << o.params << "\n"
      << extra;
    return m.str();
}

struct FittedSplit {
    BenchmarkDataset bench;
    Split split;
    std::uint64_t split_seed = 0;
    std::unique_ptr<Detector> model;
};

FittedSplit fit_split(const SplitOptions& o) {
    FittedSplit f;
    f.bench = load_benchmark(o.benchmark);
    f.split_seed = split_seed(o.seed, f.bench.table, o.repetition);
    try {
        f.split = split(f.bench, {o.train_fraction, o.contamination, f.split_seed});
        if (!o.detector.empty()) {
            const auto spec = parse_detector_spec(o.detector, o.params);
            set_workers(o.workers);
            f.model = fit_detector(spec, f.split.train, detector_seed(f.split_seed, spec), Execution::parallel);
        }
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return f;
}

std::string id_score_text(const std::vector<double>& scores) {
    std::ostringstream s;
    s << "id,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) s << i << ',' << format_exact(scores[i]) << '\n';
    return s.str();
}

int cmd_scores_export(const SplitOptions& o, const fs::path& out_dir, std::size_t points, std::ostream& out) {
    const FittedSplit f = fit_split(o);
    const std::string body = split_manifest(o, "points = " + std::to_string(points) + "\n");
    const std::string hash = manifest_hash(body);
    write_output(out_dir / "manifest.txt", hash, body);
    write_matrix(out_dir / "train.csv", f.split.train, "manifest " + hash);
    write_matrix(out_dir / "test.csv", f.split.test, "manifest " + hash);
    std::ostringstream labels;
    labels << "id,label\n";
    for (std::size_t i = 0; i < f.split.test_labels.size(); ++i) labels << i << ',' << f.split.test_labels[i] << '\n';
    write_output(out_dir / "labels.csv", hash, labels.str());
    if (f.model) write_output(out_dir / "scores.csv", hash, id_score_text(f.model->score_batch(f.split.test)));
    if (points > 0) {
        Matrix pts;
        draw_box_samples(bounding_box(f.bench.all_samples()), points, volume_seed(o.seed, f.bench.id()), pts);
        write_matrix(out_dir / "points.csv", pts, "manifest " + hash);
        if (f.model) write_output(out_dir / "point_scores.csv", hash, id_score_text(f.model->score_batch(pts)));
    }
    out << "exported split of " << f.bench.id() << " (" << f.split.train.rows() << " train, " << f.split.test.rows()
        << " test" << (points ? ", " + std::to_string(points) + " volume points" : std::string()) << ") to "
        << out_dir.string() << "\n";
    return kSuccess;
}

LabeledScores read_external(const fs::path& labels_path, const fs::path& scores_path) {
    const auto table = read_csv(labels_path);
    if (table.header.size() != 2 || table.header[0] != "id" || table.header[1] != "label") {
        throw FormatError(labels_path.string() + ": expected header 'id,label'");
    }
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (const auto& row : table.rows) {
        const auto loc = labels_path.string() + ":" + std::to_string(row.line);
        if (row.fields[1] != "0" && row.fields[1] != "1") throw FormatError(loc + ": label must be 0 or 1");
        ids.push_back(row.fields[0]);
        labels.push_back(row.fields[1] == "1" ? 1 : 0);
    }
    const auto scores = ExternalScores::load(scores_path);
    if (scores.size() != ids.size()) {
        throw FormatError(scores_path.string() + ": " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(ids.size()) + " labeled ids");
    }
    std::vector<double> values;
    try {
        values = scores.lookup(ids);
    } catch (const std::out_of_range& e) {
        throw FormatError(scores_path.string() + ": " + e.what());
    }
    return LabeledScores(std::move(labels), std::move(values));
}

std::vector<double> read_point_scores(const fs::path& path) {
    const auto table = read_csv(path);
    if (table.header.size() != 2 || table.header[1] != "score") throw FormatError(path.string() + ": expected header 'id,score'");
    std::vector<double> v;
    for (const auto& row : table.rows) {
        const auto loc = path.string() + ":" + std::to_string(row.line);
        const double s = parse_double(row.fields[1], loc);
        if (!std::isfinite(s)) throw FormatError(loc + ": non-finite score");
        v.push_back(s);
    }
    if (v.empty()) throw FormatError(path.string() + ": no point scores");
    return v;
}

struct VolumeRow {
    double alpha;
    double threshold;
    std::size_t normal_count;
    std::size_t n;
};

std::string volume_table(const std::vector<VolumeRow>& rows) {
    std::ostringstream s;
    s << "alpha,threshold,vol,cvol,normal_count,n_samples\n";
    for (const auto& r : rows) {
        const double vol = static_cast<double>(r.normal_count) / static_cast<double>(r.n);
        s << format_exact(r.alpha) << ',' << format_exact(r.threshold) << ',' << format_exact(vol) << ','
          << format_exact(1.0 - vol) << ',' << r.normal_count << ',' << r.n << '\n';
    }
    return s.str();
}

std::vector<VolumeRow> grid_volume(const LabeledScores& data, const std::vector<double>& point_scores,
                                   const std::vector<double>& alphas) {
    const RocCurve roc = build_roc(data);
    std::vector<VolumeRow> rows;
    for (const double a : alphas) {
        const double tau = threshold_at_fpr(roc, a);
        const auto below = static_cast<std::size_t>(
            std::count_if(point_scores.begin(), point_scores.end(), [&](double s) { return s < tau; }));
        rows.push_back({a, tau, below, point_scores.size()});
    }
    return rows;
}

void emit(const std::string& text, const std::string& hash, const std::string& output, std::ostream& out) {
    if (output.empty()) {
        out << header_line(hash) << text;
    } else {
        write_output(output, hash, text);
    }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string manifest_hash(const std::string& text) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
    return buf;
}

std::multimap<std::string, std::string> read_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::multimap<std::string, std::string> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        entries.emplace(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return entries;
}

std::vector<DetectorSpec> expand_detector_line(const std::string& line) {
    std::istringstream in(line);
    std::string kind;
    in >> kind;
    if (kind.empty()) throw UsageError("detector: missing detector kind");
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == token.size()) {
            throw UsageError("detector: expected key=value[,value...], got '" + token + "'");
        }
        std::vector<std::string> values;
        for (const auto& v : split_fields(token.substr(eq + 1), ',')) {
            if (!v.empty()) values.push_back(v);
        }
        axes.emplace_back(token.substr(0, eq), std::move(values));
    }
    std::vector<std::string> assignments{""};
    for (const auto& [key, values] : axes) {
        std::vector<std::string> next;
        for (const auto& prefix : assignments) {
            for (const auto& v : values) next.push_back(prefix + (prefix.empty() ? "" : ";") + key + "=" + v);
        }
        assignments = std::move(next);
    }
    std::vector<DetectorSpec> specs;
    for (const auto& a : assignments) {
        try {
            const auto spec = parse_detector_spec(kind, a);
            if (spec.k == 0 || spec.n_trees == 0 || spec.subsample == 0) {
                throw std::invalid_argument("hyperparameters must be positive in '" + a + "'");
            }
            specs.push_back(spec);
        } catch (const std::exception& e) {
            throw UsageError("detector '" + line + "': " + e.what());
        }
    }
    return specs;
}

void apply_config(const std::multimap<std::string, std::string>& entries, const fs::path& config_dir,
                  RunSettings& s) {
    std::vector<DetectorSpec> detectors;
    bool have_detectors = false;
    const auto resolve = [&](const std::string& v) {
        const fs::path p(v);
        return (p.is_absolute() ? p : config_dir / p).lexically_normal();
    };
    for (const auto& [key, value] : entries) {
        if (key == "benchmarks") {
            s.benchmarks = resolve(value);
        } else if (key == "out") {
            s.out = resolve(value);
        } else if (key == "seed") {
            s.grid.master_seed = parse_count(value, key);
        } else if (key == "repetitions") {
            s.grid.repetitions = static_cast<int>(parse_count(value, key));
        } else if (key == "volume_samples") {
            s.grid.volume_samples = parse_count(value, key);
        } else if (key == "precision_rounds") {
            s.grid.precision_rounds = static_cast<int>(parse_count(value, key));
        } else if (key == "train_fraction") {
            s.grid.train_fraction = parse_levels(value, key).front();
        } else if (key == "alphas") {
            s.grid.alphas = parse_levels(value, key);
        } else if (key == "p_levels") {
            s.grid.p_levels = parse_levels(value, key);
        } else if (key == "contaminations") {
            s.grid.contaminations = parse_levels(value, key);
        } else if (key == "validation_split") {
            s.grid.validation_split = parse_bool(value, key);
        } else if (key == "workers") {
            s.workers = parse_count(value, key);
        } else if (key == "detector") {
            have_detectors = true;
            for (auto& d : expand_detector_line(value)) detectors.push_back(d);
        } else {
            throw UsageError("unknown config key '" + key + "'");
        }
    }
    if (have_detectors) s.grid.detectors = std::move(detectors);
}

std::string manifest_text(const RunSettings& s) {
    const auto& g = s.grid;
    std::ostringstream m;
    m << "version = " << kToolVersion << "\n"
      << "config = " << s.config.string() << "\n"
      << "benchmarks = " << s.benchmarks.string() << "\n"
      << "out = " << s.out.string() << "\n"
      << "seed = " << g.master_seed << "\n"
      << "repetitions = " << g.repetitions << "\n"
      << "volume_samples = " << g.volume_samples << "\n"
      << "precision_rounds = " << g.precision_rounds << "\n"
      << "train_fraction = " << format_exact(g.train_fraction) << "\n"
      << "alphas = " << join_levels(g.alphas) << "\n"
      << "p_levels = " << join_levels(g.p_levels) << "\n"
      << "contaminations = " << join_levels(g.contaminations) << "\n"
      << "validation_split = " << (g.validation_split ? "true" : "false") << "\n";
    for (const auto& d : g.detectors) m << "detector = " << d.name() << " " << d.params() << "\n";
    return m.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Anomaly-detection performance measures: benchmark preparation, grid runs and aggregation."};
    app.name("admeasures");
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // prepare
    std::string prep_in, prep_out;
    bool prep_scale = false;
    auto* prepare = app.add_subcommand("prepare", "Build the benchmark cache from raw labeled tables");
    prepare->add_option("--input", prep_in, "Directory of tables whose last column is 'class'")->required();
    prepare->add_option("--output", prep_out, "Benchmark cache directory")->required();
    prepare->add_flag("--scale", prep_scale, "Min-max scale every feature to [0, 1]");

    // run
    std::string run_config, run_bench, run_out, run_alphas, run_p, run_cont;
    std::uint64_t run_seed = 0;
    int run_reps = 0, run_rounds = 0;
    std::size_t run_samples = 0, run_workers = 0;
    double run_frac = 0.0;
    bool run_validation = false, run_quiet = false;
    auto* runc = app.add_subcommand("run", "Execute the experiment grid (resumable)");
    runc->add_option("--config", run_config, "Key-value configuration file")->required();
    auto* o_bench = runc->add_option("--benchmarks", run_bench, "Benchmark cache directory");
    auto* o_out = runc->add_option("--out", run_out, "Run output directory");
    auto* o_seed = runc->add_option("--seed", run_seed, "Master seed");
    auto* o_reps = runc->add_option("--repetitions", run_reps, "Repetitions per cell");
    auto* o_samples = runc->add_option("--volume-samples", run_samples, "Monte-Carlo volume samples");
    auto* o_rounds = runc->add_option("--precision-rounds", run_rounds, "precision@p subsampling rounds");
    auto* o_frac = runc->add_option("--train-fraction", run_frac, "Share of normals used for training");
    auto* o_alphas = runc->add_option("--alphas", run_alphas, "Comma-separated FPR levels");
    auto* o_p = runc->add_option("--p-levels", run_p, "Comma-separated precision@p levels");
    auto* o_cont = runc->add_option("--contaminations", run_cont, "Comma-separated training contamination levels");
    auto* o_val = runc->add_flag("--validation-split", run_validation, "Also evaluate on a validation half");
    auto* o_workers = runc->add_option("--workers", run_workers, "Worker threads (default: all cores)");
    runc->add_flag("--quiet", run_quiet, "Suppress per-cell progress");

    // aggregate
    AggregateOptions agg;
    std::string agg_out;
    double agg_alpha = 0.0, agg_p = 0.0;
    auto* aggregate = app.add_subcommand("aggregate", "Compute tables from a record store");
    aggregate->add_option("kind", agg.kind, "rank | kendall | loss | multiclass | rocband")->required();
    aggregate->add_option("--out", agg_out, "Run output directory")->required();
    aggregate->add_option("--contamination", agg.contamination, "Training contamination level to aggregate");
    aggregate->add_option("--mode", agg.mode, "rank: best or mean hyperparameter");
    aggregate->add_flag("--validation", agg.validation, "loss: select on the validation half");
    aggregate->add_option("--measure", agg.measures, "Restrict to these measures (column names)");
    auto* o_agg_alpha = aggregate->add_option("--alpha", agg_alpha, "Keep FPR-level measures at this alpha only");
    auto* o_agg_p = aggregate->add_option("--p", agg_p, "Keep precision@p at this p only");
    aggregate->add_option("--name", agg.name, "Output base name under <out>/tables");
    aggregate->add_option("--benchmark", agg.benchmark, "rocband: benchmark id (<table>-<class>)");
    aggregate->add_option("--detector", agg.detector, "rocband: knn | lof | iforest");
    aggregate->add_option("--params", agg.params, "rocband: hyperparameters, e.g. 'variant=gamma;k=5'");
    aggregate->add_option("--splits", agg.splits, "rocband: number of resplits");
    agg.workers = default_workers();
    aggregate->add_option("--workers", agg.workers, "Worker threads");

    // scores
    SplitOptions so;
    so.workers = default_workers();
    std::string sc_out, ev_labels, ev_scores, ev_points, ev_alphas = "0.05,0.01", ev_p = "0.05,0.01", ev_output;
    std::size_t sc_points = 0;
    int ev_rounds = 10;
    std::uint64_t ev_seed = 0;
    auto* scores = app.add_subcommand("scores", "Per-sample scores for external-detector workflows");
    scores->require_subcommand(1);
    auto* exportc = scores->add_subcommand("export", "Write a grid split, its labels and detector scores");
    const auto add_split_options = [&](CLI::App* c) {
        c->add_option("--benchmark", so.benchmark, "Benchmark directory <cache>/<table>/<class>")->required();
        c->add_option("--seed", so.seed, "Master seed of the run");
        c->add_option("--repetition", so.repetition, "Repetition index");
        c->add_option("--contamination", so.contamination, "Training contamination");
        c->add_option("--train-fraction", so.train_fraction, "Share of normals used for training");
        c->add_option("--params", so.params, "Hyperparameters, e.g. 'variant=gamma;k=5'");
        c->add_option("--workers", so.workers, "Worker threads");
    };
    add_split_options(exportc);
    exportc->add_option("--detector", so.detector, "Built-in detector to score with (optional)");
    exportc->add_option("--out", sc_out, "Output directory")->required();
    exportc->add_option("--points", sc_points, "Also export this many volume sampling points");
    auto* evaluate = scores->add_subcommand("evaluate", "Every measure from an external 'id,score' file");
    evaluate->add_option("--labels", ev_labels, "'id,label' file")->required();
    evaluate->add_option("--scores", ev_scores, "'id,score' file")->required();
    evaluate->add_option("--point-scores", ev_points, "Scores of the volume sampling points (enables CVOL)");
    evaluate->add_option("--alphas", ev_alphas, "Comma-separated FPR levels");
    evaluate->add_option("--p-levels", ev_p, "Comma-separated precision@p levels");
    evaluate->add_option("--rounds", ev_rounds, "precision@p subsampling rounds");
    evaluate->add_option("--seed", ev_seed, "precision@p seed");
    evaluate->add_option("--output", ev_output, "Write here instead of standard output");

    // volume
    SplitOptions vo;
    vo.workers = default_workers();
    std::string vol_labels, vol_scores, vol_points, vol_alphas = "0.05,0.01", vol_output;
    std::size_t vol_samples = 100000;
    auto* volume = app.add_subcommand("volume", "One-off VOL/CVOL estimate for a detector or a scored point grid");
    volume->add_option("--benchmark", vo.benchmark, "Benchmark directory (detector mode)");
    volume->add_option("--detector", vo.detector, "knn | lof | iforest (detector mode)");
    volume->add_option("--params", vo.params, "Hyperparameters");
    volume->add_option("--seed", vo.seed, "Master seed");
    volume->add_option("--repetition", vo.repetition, "Repetition index");
    volume->add_option("--contamination", vo.contamination, "Training contamination");
    volume->add_option("--train-fraction", vo.train_fraction, "Share of normals used for training");
    volume->add_option("--samples", vol_samples, "Monte-Carlo samples");
    volume->add_option("--workers", vo.workers, "Worker threads");
    volume->add_option("--labels", vol_labels, "'id,label' file (score-grid mode)");
    volume->add_option("--scores", vol_scores, "'id,score' file of the labeled samples (score-grid mode)");
    volume->add_option("--point-scores", vol_points, "'id,score' file of the sampling points (score-grid mode)");
    volume->add_option("--alphas", vol_alphas, "Comma-separated FPR levels");
    volume->add_option("--output", vol_output, "Write here instead of standard output");

    std::vector<std::string> argv_storage{"admeasures"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_storage) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kUsage;
    }

    try {
        if (*prepare) return cmd_prepare(prep_in, prep_out, prep_scale, out);

        if (*runc) {
            RunSettings s;
            s.config = fs::path(run_config).lexically_normal();
            s.grid.detectors = default_detector_grid();
            s.workers = default_workers();
            const auto dir = s.config.has_parent_path() ? s.config.parent_path() : fs::path(".");
            apply_config(read_config_file(s.config), dir, s);
            if (o_bench->count()) s.benchmarks = fs::path(run_bench).lexically_normal();
            if (o_out->count()) s.out = fs::path(run_out).lexically_normal();
            if (o_seed->count()) s.grid.master_seed = run_seed;
            if (o_reps->count()) s.grid.repetitions = run_reps;
            if (o_samples->count()) s.grid.volume_samples = run_samples;
            if (o_rounds->count()) s.grid.precision_rounds = run_rounds;
            if (o_frac->count()) s.grid.train_fraction = run_frac;
            if (o_alphas->count()) s.grid.alphas = parse_levels(run_alphas, "--alphas");
            if (o_p->count()) s.grid.p_levels = parse_levels(run_p, "--p-levels");
            if (o_cont->count()) s.grid.contaminations = parse_levels(run_cont, "--contaminations");
            if (o_val->count()) s.grid.validation_split = run_validation;
            if (o_workers->count()) s.workers = run_workers;
            s.quiet = run_quiet;
            return cmd_run(s, out, err);
        }

        if (*aggregate) {
            agg.run_dir = agg_out;
            if (o_agg_alpha->count()) agg.alpha = agg_alpha;
            if (o_agg_p->count()) agg.p = agg_p;
            return cmd_aggregate(agg, out, err);
        }

        if (*exportc) return cmd_scores_export(so, sc_out, sc_points, out);

        if (*evaluate) {
            const LabeledScores data = read_external(ev_labels, ev_scores);
            const auto alphas = parse_levels(ev_alphas, "--alphas");
            const auto p_levels = parse_levels(ev_p, "--p-levels");
            const RocCurve roc = build_roc(data);
            std::vector<double> point_scores;
            if (!ev_points.empty()) point_scores = read_point_scores(ev_points);
            std::ostringstream text;
            text << "measure,value\n";
            for (const auto& m : standard_measures(alphas, p_levels)) {
                double v = 0.0;
                switch (m.kind) {
                    case MeasureKind::auc: v = auc(roc); break;
                    case MeasureKind::auc_w: v = auc_weighted(roc); break;
                    case MeasureKind::auc_at: v = auc_at(roc, m.level, true); break;
                    case MeasureKind::tpr_at: v = tpr_at(roc, m.level); break;
                    case MeasureKind::f1_at: v = f1_score(confusion_at(data, threshold_at_fpr(roc, m.level))); break;
                    case MeasureKind::precision_at:
                        v = precision_at_p(data, {m.level, ev_rounds, ev_seed}).value;
                        break;
                    case MeasureKind::cvol_at: {
                        if (point_scores.empty()) continue;
                        const auto row = grid_volume(data, point_scores, {m.level}).front();
                        v = 1.0 - static_cast<double>(row.normal_count) / static_cast<double>(row.n);
                        break;
                    }
                }
                text << m.name() << ',' << format_exact(v) << '\n';
            }
            const std::string body = "version = " + std::string(kToolVersion) + "\nlabels = " + ev_labels +
                                     "\nscores = " + ev_scores + "\npoint_scores = " + ev_points + "\nalphas = " +
                                     join_levels(alphas) + "\np_levels = " + join_levels(p_levels) +
                                     "\nrounds = " + std::to_string(ev_rounds) + "\nseed = " + std::to_string(ev_seed) +
                                     "\n";
            emit(text.str(), manifest_hash(body), ev_output, out);
            return kSuccess;
        }

        if (*volume) {
            const auto alphas = parse_levels(vol_alphas, "--alphas");
            for (const double a : alphas) {
                if (!(a > 0.0 && a <= 1.0)) throw UsageError("--alphas: levels must lie in (0, 1]");
            }
            if (!vol_points.empty()) {
                if (vol_labels.empty() || vol_scores.empty()) {
                    throw UsageError("score-grid mode needs --labels, --scores and --point-scores");
                }
                const auto rows = grid_volume(read_external(vol_labels, vol_scores), read_point_scores(vol_points), alphas);
                const std::string body = "version = " + std::string(kToolVersion) + "\nlabels = " + vol_labels +
                                         "\nscores = " + vol_scores + "\npoint_scores = " + vol_points +
                                         "\nalphas = " + join_levels(alphas) + "\n";
                emit(volume_table(rows), manifest_hash(body), vol_output, out);
                return kSuccess;
            }
            if (vo.benchmark.empty() || vo.detector.empty()) {
                throw UsageError("volume needs --benchmark and --detector, or --labels/--scores/--point-scores");
            }
            if (vol_samples == 0) throw UsageError("--samples must be positive");
            const FittedSplit f = fit_split(vo);
            const LabeledScores data(f.split.test_labels, f.model->score_batch(f.split.test));
            const auto est = mc_volume_at_fprs(f.model->as_score_function(), bounding_box(f.bench.all_samples()), data,
                                               alphas, vol_samples, volume_seed(vo.seed, f.bench.id()));
            std::vector<VolumeRow> rows;
            for (std::size_t i = 0; i < est.size(); ++i) {
                rows.push_back({alphas[i], est[i].threshold, est[i].normal_count, est[i].n_samples});
            }
            const std::string body = split_manifest(
                vo, "samples = " + std::to_string(vol_samples) + "\nalphas = " + join_levels(alphas) + "\n");
            emit(volume_table(rows), manifest_hash(body), vol_output, out);
            return kSuccess;
        }
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kPartial;
    }
    return kUsage;
}

}  // namespace admeasures::cli
