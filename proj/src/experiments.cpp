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

#include "admeasures/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "admeasures/curves.hpp"
#include "admeasures/io.hpp"
#include "admeasures/thresholded.hpp"

namespace admeasures {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string level_text(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level);
    return buf;
}

std::string sanitize_status(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    return s.empty() ? std::string("error") : s;
}

// Stream ids for seeds derived from a split seed.
enum SeedStream : std::uint64_t { kPrecisionStream = 1, kVolumeStream = 2, kValidationStream = 3 };

// Every configured measure on one labeled fold. All volume thresholds share
// one Monte-Carlo pass.
std::vector<double> compute_measures(std::span<const MeasureId> measures, const LabeledScores& data,
                                     const Detector& detector, const SamplingBox& box, const GridConfig& cfg,
                                     std::uint64_t precision_seed, std::uint64_t vol_seed, Execution exec) {
    const RocCurve roc = build_roc(data);
    std::vector<double> values(measures.size(), kNaN);
    std::vector<std::size_t> cvol_slots;
    std::vector<double> cvol_thresholds;
    for (std::size_t i = 0; i < measures.size(); ++i) {
        const auto& m = measures[i];
        switch (m.kind) {
            case MeasureKind::auc: values[i] = auc(roc); break;
            case MeasureKind::auc_w: values[i] = auc_weighted(roc); break;
            case MeasureKind::auc_at: values[i] = auc_at(roc, m.level, true); break;
            case MeasureKind::tpr_at: values[i] = tpr_at(roc, m.level); break;
            case MeasureKind::f1_at: values[i] = f1_score(confusion_at(data, threshold_at_fpr(roc, m.level))); break;
            case MeasureKind::precision_at:
                values[i] = precision_at_p(data, {m.level, cfg.precision_rounds, precision_seed}).value;
                break;
            case MeasureKind::cvol_at:
                cvol_slots.push_back(i);
                cvol_thresholds.push_back(threshold_at_fpr(roc, m.level));
                break;
        }
    }
    if (!cvol_slots.empty()) {
        const auto counts =
            count_below(detector.as_score_function(), box, cvol_thresholds, cfg.volume_samples, vol_seed, exec);
        for (std::size_t t = 0; t < cvol_slots.size(); ++t) {
            const double vol = static_cast<double>(counts[t]) / static_cast<double>(cfg.volume_samples);
            values[cvol_slots[t]] = 1.0 - vol;
        }
    }
    return values;
}

std::vector<double> column(const BenchmarkGrid& g, std::size_t measure, bool validation) {
    std::vector<double> out;
    out.reserve(g.combos.size());
    for (const auto& c : g.combos) out.push_back(validation ? c.validation_values.at(measure) : c.values[measure]);
    return out;
}

std::string pad(const std::string& s, std::size_t width, bool left_align) {
    if (s.size() >= width) return s;
    return left_align ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string MeasureId::name() const {
    switch (kind) {
        case MeasureKind::auc: return "auc";
        case MeasureKind::auc_w: return "auc_w";
        case MeasureKind::auc_at: return "auc_at_" + level_text(level);
        case MeasureKind::tpr_at: return "tpr_at_" + level_text(level);
        case MeasureKind::precision_at: return "precision_at_" + level_text(level);
        case MeasureKind::f1_at: return "f1_at_" + level_text(level);
        case MeasureKind::cvol_at: return "cvol_at_" + level_text(level);
    }
    return "?";
}

std::string MeasureId::label() const {
    switch (kind) {
        case MeasureKind::auc: return "AUC";
        case MeasureKind::auc_w: return "AUC_w";
        case MeasureKind::auc_at: return "AUC@" + level_text(level);
        case MeasureKind::tpr_at: return "TPR@" + level_text(level);
        case MeasureKind::precision_at: return "precision@" + level_text(level);
        case MeasureKind::f1_at: return "F1@" + level_text(level);
        case MeasureKind::cvol_at: return "CVOL@" + level_text(level);
    }
    return "?";
}

MeasureId MeasureId::parse(std::string_view name) {
    if (name == "auc") return {MeasureKind::auc, 0.0};
    if (name == "auc_w") return {MeasureKind::auc_w, 0.0};
    static const std::pair<std::string_view, MeasureKind> prefixes[] = {
        {"auc_at_", MeasureKind::auc_at},           {"tpr_at_", MeasureKind::tpr_at},
        {"precision_at_", MeasureKind::precision_at}, {"f1_at_", MeasureKind::f1_at},
        {"cvol_at_", MeasureKind::cvol_at},
    };
    for (const auto& [prefix, kind] : prefixes) {
        if (name.substr(0, prefix.size()) == prefix) {
            const double level = parse_double(name.substr(prefix.size()), "measure name");
            if (!(level > 0.0 && level <= 1.0)) break;
            return {kind, level};
        }
    }
    throw std::invalid_argument("unknown measure '" + std::string(name) + "'");
}

std::vector<MeasureId> standard_measures(std::span<const double> alphas, std::span<const double> p_levels) {
    std::vector<double> a(alphas.begin(), alphas.end());
    std::vector<double> p(p_levels.begin(), p_levels.end());
    std::sort(a.rbegin(), a.rend());
    std::sort(p.rbegin(), p.rend());
    std::vector<MeasureId> out{{MeasureKind::auc, 0.0}, {MeasureKind::auc_w, 0.0}};
    for (const double v : a) out.push_back({MeasureKind::auc_at, v});
    for (const double v : p) out.push_back({MeasureKind::precision_at, v});
    for (const double v : a) out.push_back({MeasureKind::tpr_at, v});
    for (const double v : a) out.push_back({MeasureKind::f1_at, v});
    for (const double v : a) out.push_back({MeasureKind::cvol_at, v});
    return out;
}

void GridConfig::validate() const {
    if (detectors.empty()) throw std::invalid_argument("grid: detector grid is empty");
    if (alphas.empty() || p_levels.empty() || contaminations.empty()) {
        throw std::invalid_argument("grid: alpha, p and contamination levels must be nonempty");
    }
    for (const double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("grid: alpha levels must lie in (0, 1)");
    }
    for (const double p : p_levels) {
        if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("grid: p levels must lie in (0, 1)");
    }
    for (const double c : contaminations) {
        if (!(c >= 0.0 && c < 0.5)) throw std::invalid_argument("grid: contamination levels must lie in [0, 0.5)");
    }
    if (repetitions < 1) throw std::invalid_argument("grid: repetitions must be positive");
    if (volume_samples < 1) throw std::invalid_argument("grid: volume sample count must be positive");
    if (precision_rounds < 1) throw std::invalid_argument("grid: precision rounds must be positive");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("grid: train fraction must lie in (0, 1)");
    }
}

std::vector<DetectorSpec> default_detector_grid() {
    std::vector<DetectorSpec> grid;
    for (const auto variant : {KnnVariant::kappa, KnnVariant::gamma, KnnVariant::delta}) {
        for (const std::size_t k : {1, 3, 5, 7, 9, 13, 21, 31, 51}) {
            DetectorSpec s;
            s.kind = DetectorKind::knn;
            s.variant = variant;
            s.k = k;
            grid.push_back(s);
        }
    }
    for (const std::size_t k : {10, 20, 50}) {
        DetectorSpec s;
        s.kind = DetectorKind::lof;
        s.k = k;
        grid.push_back(s);
    }
    for (const std::size_t trees : {50, 100, 200}) {
        DetectorSpec s;
        s.kind = DetectorKind::iforest;
        s.n_trees = trees;
        grid.push_back(s);
    }
    return grid;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> RecordSet::measure_index(const MeasureId& m) const {
    for (std::size_t i = 0; i < measures.size(); ++i) {
        if (measures[i] == m) return i;
    }
    return std::nullopt;
}

void RecordSet::sort() {
    std::sort(records.begin(), records.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
        const auto ka = std::make_tuple(a.benchmark(), a.combo, a.contamination, a.repetition);
        const auto kb = std::make_tuple(b.benchmark(), b.combo, b.contamination, b.repetition);
        return ka < kb;
    });
}

std::uint64_t split_seed(std::uint64_t master, const std::string& dataset, int repetition) {
    return derive_seed(master, dataset, static_cast<std::uint64_t>(repetition));
}

std::uint64_t detector_seed(std::uint64_t split, const DetectorSpec& spec) {
    return mix_seed(split, fnv1a64(spec.name() + "/" + spec.params()));
}

std::uint64_t volume_seed(std::uint64_t master, const std::string& benchmark) {
    return mix_seed(derive_seed(master, benchmark, 0), kVolumeStream);
}

ExperimentRecord evaluate_cell(const BenchmarkDataset& bench, const SamplingBox& box, const DetectorSpec& detector,
                               std::size_t combo, double contamination, int repetition, const GridConfig& cfg,
                               Execution exec) {
    const auto measures = cfg.measures();
    ExperimentRecord rec;
    rec.dataset = bench.table;
    rec.anomaly_class = bench.anomaly_class;
    rec.detector = detector.name();
    rec.params = detector.params();
    rec.combo = combo;
    rec.contamination = contamination;
    rec.repetition = repetition;
    rec.values.assign(measures.size(), kNaN);
    if (cfg.validation_split) rec.validation_values.assign(measures.size(), kNaN);

    try {
        const std::uint64_t seed = split_seed(cfg.master_seed, bench.table, repetition);
        const Split s = split(bench, {cfg.train_fraction, contamination, seed});
        const auto model = fit_detector(detector, s.train, detector_seed(seed, detector), exec);
        const auto scores = model->score_batch(s.test, exec);
        const std::uint64_t vseed = volume_seed(cfg.master_seed, bench.id());
        const std::uint64_t pseed = mix_seed(seed, kPrecisionStream);

        if (!cfg.validation_split) {
            rec.values = compute_measures(measures, LabeledScores(s.test_labels, scores), *model, box, cfg, pseed,
                                          vseed, exec);
            return rec;
        }

        // Validation half: floor(n/2) of each class of the test fold.
        std::mt19937_64 rng(mix_seed(seed, kValidationStream));
        std::vector<std::size_t> normals;
        std::vector<std::size_t> anomalies;
        for (std::size_t i = 0; i < s.test_labels.size(); ++i) {
            (s.test_labels[i] == 1 ? anomalies : normals).push_back(i);
        }
        std::shuffle(normals.begin(), normals.end(), rng);
        std::shuffle(anomalies.begin(), anomalies.end(), rng);
        std::vector<int> val_labels, test_labels;
        std::vector<double> val_scores, test_scores;
        const auto assign = [&](const std::vector<std::size_t>& idx) {
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const bool validation = i < idx.size() / 2;
                (validation ? val_labels : test_labels).push_back(s.test_labels[idx[i]]);
                (validation ? val_scores : test_scores).push_back(scores[idx[i]]);
            }
        };
        assign(normals);
        assign(anomalies);
        rec.validation_values = compute_measures(measures, LabeledScores(val_labels, val_scores), *model, box, cfg,
                                                 pseed, vseed, exec);
        rec.values = compute_measures(measures, LabeledScores(test_labels, test_scores), *model, box, cfg, pseed,
                                      vseed, exec);
    } catch (const std::exception& e) {
        rec.status = sanitize_status(e.what());
        std::fill(rec.values.begin(), rec.values.end(), kNaN);
        std::fill(rec.validation_values.begin(), rec.validation_values.end(), kNaN);
    }
    return rec;
}

GridResult run_grid(const GridConfig& cfg, std::span<const BenchmarkDataset> benchmarks, const RecordSet& existing,
                    const std::function<void(const GridProgress&)>& progress, Execution exec) {
    cfg.validate();
    const auto measures = cfg.measures();
    if (!existing.records.empty() && existing.measures != measures) {
        throw std::invalid_argument("run_grid: existing records use a different measure set");
    }

    std::set<CellKey> present;
    for (const auto& r : existing.records) present.insert(r.key());

    struct Cell {
        std::size_t bench;
        std::size_t combo;
        double contamination;
        int repetition;
    };
    std::vector<Cell> todo;
    for (std::size_t b = 0; b < benchmarks.size(); ++b) {
        for (const double c : cfg.contaminations) {
            for (std::size_t combo = 0; combo < cfg.detectors.size(); ++combo) {
                const auto& spec = cfg.detectors[combo];
                for (int rep = 0; rep < cfg.repetitions; ++rep) {
                    if (!present.contains({benchmarks[b].id(), spec.name(), spec.params(), c, rep})) {
                        todo.push_back({b, combo, c, rep});
                    }
                }
            }
        }
    }

    std::vector<SamplingBox> boxes;
    boxes.reserve(benchmarks.size());
    for (const auto& b : benchmarks) boxes.push_back(bounding_box(b.all_samples()));

    std::vector<ExperimentRecord> fresh(todo.size());
    std::size_t done = 0;
    const auto run_one = [&](std::size_t i) {
        const auto& cell = todo[i];
        fresh[i] = evaluate_cell(benchmarks[cell.bench], boxes[cell.bench], cfg.detectors[cell.combo], cell.combo,
                                 cell.contamination, cell.repetition, cfg, Execution::serial);
        if (progress) {
#pragma omp critical(admeasures_grid_progress)
            {
                ++done;
                progress({done, todo.size(), &fresh[i]});
            }
        }
    };

    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < todo.size(); ++i) run_one(i);
    } else {
        const auto n = static_cast<std::ptrdiff_t>(todo.size());
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) run_one(static_cast<std::size_t>(i));
    }

    GridResult result;
    result.records.measures = measures;
    result.records.records = existing.records;
    result.records.records.insert(result.records.records.end(), std::make_move_iterator(fresh.begin()),
                                  std::make_move_iterator(fresh.end()));
    result.records.sort();
    result.new_cells = todo.size();
    for (const auto& r : result.records.records) result.missing_cells += r.ok() ? 0 : 1;
    return result;
}

RecordSet repetition_means(const RecordSet& records) {
    struct Acc {
        ExperimentRecord first;
        std::vector<double> sum;
        int count = 0;
    };
    std::map<std::tuple<std::string, std::size_t, double>, Acc> groups;
    for (const auto& r : records.records) {
        auto& acc = groups[{r.benchmark(), r.combo, r.contamination}];
        if (acc.count == 0) {
            acc.first = r;
            acc.sum.assign(r.values.size(), 0.0);
        }
        for (std::size_t i = 0; i < r.values.size(); ++i) acc.sum[i] += r.values[i];
        ++acc.count;
    }
    RecordSet out;
    out.measures = records.measures;
    for (auto& [key, acc] : groups) {
        ExperimentRecord m = acc.first;
        m.repetition = acc.count;
        m.validation_values.clear();
        for (std::size_t i = 0; i < acc.sum.size(); ++i) m.values[i] = acc.sum[i] / acc.count;
        m.status = std::all_of(m.values.begin(), m.values.end(), [](double v) { return std::isfinite(v); })
                       ? "ok"
                       : "incomplete";
        out.records.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string format_records(const RecordSet& records, std::span<const std::size_t> rows,
                           std::string_view manifest_hash) {
    std::ostringstream out;
    out << "# manifest " << manifest_hash << '\n';
    out << "dataset,anomaly_class,detector,params,combo,contamination,repetition,status";
    for (const auto& m : records.measures) out << ',' << m.name();
    const bool has_validation =
        std::any_of(rows.begin(), rows.end(), [&](std::size_t i) { return !records.records[i].validation_values.empty(); });
    if (has_validation) {
        for (const auto& m : records.measures) out << ",val:" << m.name();
    }
    out << '\n';
    for (const std::size_t i : rows) {
        const auto& r = records.records[i];
        out << r.dataset << ',' << r.anomaly_class << ',' << r.detector << ',' << r.params << ',' << r.combo << ','
            << format_exact(r.contamination) << ',' << r.repetition << ',' << r.status;
        for (const double v : r.values) out << ',' << format_exact(v);
        if (has_validation) {
            for (std::size_t j = 0; j < records.measures.size(); ++j) {
                out << ',' << format_exact(r.validation_values.empty() ? kNaN : r.validation_values[j]);
            }
        }
        out << '\n';
    }
    return out.str();
}

void write_record_store(const std::filesystem::path& dir, const RecordSet& records, std::string_view manifest_hash) {
    std::map<std::string, std::vector<std::size_t>> files;
    for (std::size_t i = 0; i < records.records.size(); ++i) {
        const auto& r = records.records[i];
        files[r.benchmark() + "__" + r.detector + ".csv"].push_back(i);
    }
    std::filesystem::create_directories(dir);
    for (const auto& [name, rows] : files) {
        const auto path = dir / name;
        const std::string content = format_records(records, rows, manifest_hash);
        // Leave unchanged files untouched so reruns do not bump timestamps.
        if (std::filesystem::exists(path) && read_file(path) == content) continue;
        write_file_atomic(path, content);
    }
}

RecordSet read_record_store(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw FormatError("record store not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());

    RecordSet set;
    bool have_measures = false;
    for (const auto& path : files) {
        const auto table = read_csv(path);
        constexpr std::size_t kFixed = 8;
        if (table.header.size() < kFixed || table.header[0] != "dataset" || table.header[7] != "status") {
            throw FormatError(path.string() + ": not a record file");
        }
        std::vector<MeasureId> measures;
        std::size_t val_begin = table.header.size();
        for (std::size_t j = kFixed; j < table.header.size(); ++j) {
            if (table.header[j].rfind("val:", 0) == 0) {
                val_begin = j;
                break;
            }
            measures.push_back(MeasureId::parse(table.header[j]));
        }
        if (!have_measures) {
            set.measures = measures;
            have_measures = true;
        } else if (measures != set.measures) {
            throw FormatError(path.string() + ": measure columns differ from other record files");
        }
        for (const auto& row : table.rows) {
            const auto loc = path.string() + ":" + std::to_string(row.line);
            ExperimentRecord r;
            r.dataset = row.fields[0];
            r.anomaly_class = row.fields[1];
            r.detector = row.fields[2];
            r.params = row.fields[3];
            r.combo = static_cast<std::size_t>(parse_double(row.fields[4], loc));
            r.contamination = parse_double(row.fields[5], loc);
            r.repetition = static_cast<int>(parse_double(row.fields[6], loc));
            r.status = row.fields[7];
            for (std::size_t j = kFixed; j < val_begin; ++j) r.values.push_back(parse_double(row.fields[j], loc));
            for (std::size_t j = val_begin; j < table.header.size(); ++j) {
                r.validation_values.push_back(parse_double(row.fields[j], loc));
            }
            set.records.push_back(std::move(r));
        }
    }
    set.sort();
    return set;
}

// ---------------------------------------------------------------------------

std::vector<BenchmarkGrid> averaged_grid(const RecordSet& records, double contamination) {
    struct Acc {
        const ExperimentRecord* first = nullptr;
        std::vector<double> sum;
        std::vector<double> val_sum;
        int count = 0;
    };
    std::map<std::string, std::map<std::size_t, Acc>> groups;
    for (const auto& r : records.records) {
        if (r.contamination != contamination) continue;
        auto& acc = groups[r.benchmark()][r.combo];
        if (acc.count == 0) {
            acc.first = &r;
            acc.sum.assign(r.values.size(), 0.0);
            acc.val_sum.assign(r.validation_values.size(), 0.0);
        }
        for (std::size_t i = 0; i < r.values.size(); ++i) acc.sum[i] += r.values[i];
        for (std::size_t i = 0; i < acc.val_sum.size() && i < r.validation_values.size(); ++i) {
            acc.val_sum[i] += r.validation_values[i];
        }
        ++acc.count;
    }
    std::vector<BenchmarkGrid> out;
    for (auto& [bench, combos] : groups) {
        BenchmarkGrid g;
        g.benchmark = bench;
        for (auto& [combo, acc] : combos) {
            g.dataset = acc.first->dataset;
            g.anomaly_class = acc.first->anomaly_class;
            ComboValues cv;
            cv.combo = combo;
            cv.detector = acc.first->detector;
            cv.params = acc.first->params;
            // NaN propagates through the sum: any missing repetition makes the mean missing.
            for (const double s : acc.sum) cv.values.push_back(s / acc.count);
            for (const double s : acc.val_sum) cv.validation_values.push_back(s / acc.count);
            g.combos.push_back(std::move(cv));
        }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<double> fractional_ranks_descending(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        // positions i..j (0-based) share the mean of ranks i+1..j+1
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

RankRow mean_rank_row(const std::vector<BenchmarkGrid>& grid, std::span<const MeasureId> measures,
                      std::size_t measure, RankMode mode, std::span<const std::string> detectors) {
    std::vector<std::vector<double>> ranks(detectors.size());
    std::vector<std::string> missing;
    for (const auto& g : grid) {
        std::vector<double> rep(detectors.size(), kNaN);
        bool complete = true;
        for (std::size_t d = 0; d < detectors.size(); ++d) {
            double best = -std::numeric_limits<double>::infinity();
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& c : g.combos) {
                if (c.detector != detectors[d] || std::isnan(c.values[measure])) continue;
                best = std::max(best, c.values[measure]);
                sum += c.values[measure];
                ++n;
            }
            if (n == 0) {
                missing.push_back(g.benchmark + "/" + detectors[d] + "/" + measures[measure].name());
                complete = false;
                continue;
            }
            rep[d] = mode == RankMode::best_hyperparameter ? best : sum / static_cast<double>(n);
        }
        if (!complete) continue;
        const auto r = fractional_ranks_descending(rep);
        for (std::size_t d = 0; d < detectors.size(); ++d) ranks[d].push_back(r[d]);
    }
    if (!missing.empty()) {
        throw IncompleteRecords("rank table: " + std::to_string(missing.size()) + " detector/benchmark pairs missing",
                                std::move(missing));
    }
    RankRow row;
    row.measure = measures[measure];
    for (const auto& r : ranks) {
        const auto ms = mean_std(r, 0);
        row.mean.push_back(ms.mean);
        row.std.push_back(ms.std);
    }
    return row;
}

RankTable mean_rank_table(const RecordSet& records, double contamination, RankMode mode) {
    const auto grid = averaged_grid(records, contamination);
    if (grid.empty()) throw std::invalid_argument("rank table: no records at contamination " + level_text(contamination));
    RankTable table;
    // Detectors in grid order of their first combo.
    std::map<std::size_t, std::string> first_combo;
    for (const auto& g : grid) {
        for (const auto& c : g.combos) {
            bool seen = false;
            for (const auto& [idx, name] : first_combo) seen = seen || name == c.detector;
            if (!seen) first_combo[c.combo] = c.detector;
        }
    }
    for (const auto& [idx, name] : first_combo) table.detectors.push_back(name);
    table.benchmarks = grid.size();
    for (std::size_t m = 0; m < records.measures.size(); ++m) {
        table.rows.push_back(mean_rank_row(grid, records.measures, m, mode, table.detectors));
    }
    return table;
}

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("kendall_tau: sequences differ in length");
    if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least two observations");
    double concordant = 0.0;
    double discordant = 0.0;
    double tied_x_only = 0.0;
    double tied_y_only = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                tied_x_only += 1.0;
            } else if (dy == 0.0) {
                tied_y_only += 1.0;
            } else if ((dx > 0.0) == (dy > 0.0)) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double untied_x = concordant + discordant + tied_y_only;
    const double untied_y = concordant + discordant + tied_x_only;
    if (untied_x == 0.0 || untied_y == 0.0) return std::nullopt;
    return (concordant - discordant) / std::sqrt(untied_x * untied_y);
}

double MeasureMatrix::row_mean(std::size_t row) const {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < values[row].size(); ++j) {
        if (j == row || std::isnan(values[row][j])) continue;
        sum += values[row][j];
        ++n;
    }
    return n ? sum / static_cast<double>(n) : kNaN;
}

MeasureMatrix kendall_matrix(const RecordSet& records, double contamination) {
    const auto grid = averaged_grid(records, contamination);
    if (grid.empty()) throw std::invalid_argument("kendall matrix: no records at contamination " + level_text(contamination));
    const std::size_t m = records.measures.size();
    MeasureMatrix out;
    out.measures = records.measures;
    out.values.assign(m, std::vector<double>(m, kNaN));
    out.counts.assign(m, std::vector<std::size_t>(m, 0));
    out.units = grid.size();
    for (const auto& g : grid) {
        if (g.combos.size() < 2) {
            throw std::invalid_argument("kendall matrix: benchmark '" + g.benchmark +
                                        "' has fewer than two detector/hyperparameter combos");
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        out.values[i][i] = 1.0;
        out.counts[i][i] = grid.size();
        for (std::size_t j = i + 1; j < m; ++j) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& g : grid) {
                std::vector<double> x, y;
                for (const auto& c : g.combos) {
                    if (std::isnan(c.values[i]) || std::isnan(c.values[j])) continue;
                    x.push_back(c.values[i]);
                    y.push_back(c.values[j]);
                }
                if (x.size() < 2) continue;
                if (const auto tau = kendall_tau(x, y)) {
                    sum += *tau;
                    ++n;
                }
            }
            const double v = n ? sum / static_cast<double>(n) : kNaN;
            out.values[i][j] = out.values[j][i] = v;
            out.counts[i][j] = out.counts[j][i] = n;
        }
    }
    return out;
}

double relative_loss(double best, double used) noexcept {
    if (best == 0.0) return 0.0;
    return (best - used) / best;
}

std::optional<std::size_t> select_combo(std::span<const double> select, std::span<const double> target) {
    std::optional<std::size_t> arg;
    for (std::size_t i = 0; i < select.size(); ++i) {
        if (std::isnan(select[i]) || std::isnan(target[i])) continue;
        if (!arg || select[i] > select[*arg]) arg = i;
    }
    return arg;
}

namespace {

// Loss of selecting on `select` and reading `target`; both aligned by combo.
std::optional<double> selection_loss(std::span<const double> select, std::span<const double> target) {
    const auto chosen = select_combo(select, target);
    if (!chosen) return std::nullopt;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (std::isnan(select[i]) || std::isnan(target[i])) continue;
        best = std::max(best, target[i]);
    }
    return relative_loss(best, target[*chosen]);
}

MeasureMatrix empty_matrix(const std::vector<MeasureId>& measures) {
    const std::size_t m = measures.size();
    MeasureMatrix out;
    out.measures = measures;
    out.values.assign(m, std::vector<double>(m, 0.0));
    out.counts.assign(m, std::vector<std::size_t>(m, 0));
    return out;
}

void finish_means(MeasureMatrix& out) {
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        for (std::size_t j = 0; j < out.values.size(); ++j) {
            out.values[i][j] = out.counts[i][j] ? out.values[i][j] / static_cast<double>(out.counts[i][j]) : kNaN;
        }
    }
}

}  // namespace

MeasureMatrix loss_matrix(const RecordSet& records, double contamination, bool use_validation) {
    const auto grid = averaged_grid(records, contamination);
    if (grid.empty()) throw std::invalid_argument("loss matrix: no records at contamination " + level_text(contamination));
    MeasureMatrix out = empty_matrix(records.measures);
    out.units = grid.size();
    const std::size_t m = records.measures.size();
    for (const auto& g : grid) {
        if (use_validation) {
            for (const auto& c : g.combos) {
                if (c.validation_values.size() != m) {
                    throw std::invalid_argument("loss matrix: records carry no validation values; rerun the grid "
                                                "with validation_split enabled");
                }
            }
        }
        for (std::size_t i = 0; i < m; ++i) {
            const auto sel = column(g, i, use_validation);
            for (std::size_t j = 0; j < m; ++j) {
                const auto tgt = column(g, j, false);
                if (const auto loss = selection_loss(sel, tgt)) {
                    out.values[i][j] += *loss;
                    ++out.counts[i][j];
                }
            }
        }
    }
    finish_means(out);
    return out;
}

MeasureMatrix multiclass_sensitivity(const RecordSet& records, double contamination) {
    const auto grid = averaged_grid(records, contamination);
    if (grid.empty()) {
        throw std::invalid_argument("multiclass sensitivity: no records at contamination " + level_text(contamination));
    }
    MeasureMatrix out = empty_matrix(records.measures);
    const std::size_t m = records.measures.size();

    std::map<std::string, std::vector<const BenchmarkGrid*>> by_table;
    for (const auto& g : grid) by_table[g.dataset].push_back(&g);

    for (const auto& [table, classes] : by_table) {
        if (classes.size() < 2) {
            out.skipped.push_back(table + ": single anomaly class");
            continue;
        }
        for (const auto* a : classes) {
            for (const auto* b : classes) {
                if (a == b) continue;
                ++out.units;
                // Align combos present on both classes.
                std::map<std::size_t, const ComboValues*> on_b;
                for (const auto& c : b->combos) on_b[c.combo] = &c;
                std::vector<const ComboValues*> ca, cb;
                for (const auto& c : a->combos) {
                    if (const auto it = on_b.find(c.combo); it != on_b.end()) {
                        ca.push_back(&c);
                        cb.push_back(it->second);
                    }
                }
                for (std::size_t i = 0; i < m; ++i) {
                    std::vector<double> sel;
                    for (const auto* c : ca) sel.push_back(c->values[i]);
                    for (std::size_t j = 0; j < m; ++j) {
                        std::vector<double> tgt;
                        for (const auto* c : cb) tgt.push_back(c->values[j]);
                        if (const auto loss = selection_loss(sel, tgt)) {
                            out.values[i][j] += *loss;
                            ++out.counts[i][j];
                        }
                    }
                }
            }
        }
    }
    if (out.units == 0) {
        throw std::invalid_argument("multiclass sensitivity: no table has two or more anomaly classes");
    }
    finish_means(out);
    return out;
}

// ---------------------------------------------------------------------------

RocBand roc_band(const DetectorSpec& detector, const BenchmarkDataset& bench, std::span<const std::uint64_t> seeds,
                 double contamination, double train_fraction, Execution exec) {
    if (seeds.size() < 2) throw std::invalid_argument("roc_band: need at least two splits");
    std::vector<RocCurve> curves;
    RocBand band;
    for (const auto seed : seeds) {
        try {
            const Split s = split(bench, {train_fraction, contamination, seed});
            const auto model = fit_detector(detector, s.train, detector_seed(seed, detector), exec);
            curves.push_back(build_roc(LabeledScores(s.test_labels, model->score_batch(s.test, exec))));
        } catch (const std::invalid_argument&) {
            ++band.skipped;
        }
    }
    if (curves.size() < 2) {
        throw std::invalid_argument("roc_band: fewer than two usable splits (" + std::to_string(band.skipped) +
                                    " degenerate)");
    }
    band.curves = curves.size();

    std::vector<double> knots;
    for (const auto& c : curves) {
        for (const auto& v : c.vertices()) knots.push_back(v.fpr);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    std::vector<double> tpr(curves.size());
    std::vector<double> ratio(curves.size());
    for (const double f : knots) {
        for (std::size_t c = 0; c < curves.size(); ++c) {
            tpr[c] = tpr_at(curves[c], f);
            ratio[c] = f > 0.0 ? tpr[c] / f : 0.0;
        }
        const auto t = mean_std(tpr, 1);
        const auto r = mean_std(ratio, 1);
        band.fpr.push_back(f);
        band.tpr_mean.push_back(t.mean);
        band.tpr_std.push_back(t.std);
        band.ratio_mean.push_back(r.mean);
        band.ratio_std.push_back(r.std);
    }
    return band;
}

RocBand roc_band(const DetectorSpec& detector, const BenchmarkDataset& bench, std::size_t n_splits,
                 std::uint64_t master_seed, double contamination, double train_fraction, Execution exec) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < n_splits; ++i) seeds.push_back(split_seed(master_seed, bench.table, static_cast<int>(i)));
    return roc_band(detector, bench, seeds, contamination, train_fraction, exec);
}

// ---------------------------------------------------------------------------

std::string format_rank_csv(const RankTable& table) {
    std::ostringstream out;
    out << "measure";
    for (const auto& d : table.detectors) out << ',' << d << "_mean," << d << "_std";
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.measure.name();
        for (std::size_t d = 0; d < table.detectors.size(); ++d) {
            out << ',' << format_exact(row.mean[d]) << ',' << format_exact(row.std[d]);
        }
        out << '\n';
    }
    return out.str();
}

std::string format_rank_text(const RankTable& table) {
    std::size_t label_w = 7;
    for (const auto& row : table.rows) label_w = std::max(label_w, row.measure.label().size());
    constexpr std::size_t cell_w = 14;
    std::ostringstream out;
    out << pad("measure", label_w, true);
    for (const auto& d : table.detectors) out << "  " << pad(d, cell_w, false);
    out << '\n';
    for (const auto& row : table.rows) {
        out << pad(row.measure.label(), label_w, true);
        for (std::size_t d = 0; d < table.detectors.size(); ++d) {
            out << "  " << pad(format_fixed(row.mean[d], 2) + " +/- " + format_fixed(row.std[d], 2), cell_w, false);
        }
        out << '\n';
    }
    out << "(" << table.benchmarks << " benchmarks)\n";
    return out.str();
}

std::string format_matrix_csv(const MeasureMatrix& m) {
    std::ostringstream out;
    out << "measure";
    for (const auto& c : m.measures) out << ',' << c.name();
    out << ",mean\n";
    for (std::size_t i = 0; i < m.measures.size(); ++i) {
        out << m.measures[i].name();
        for (const double v : m.values[i]) out << ',' << format_exact(v);
        out << ',' << format_exact(m.row_mean(i)) << '\n';
    }
    return out.str();
}

std::string format_matrix_text(const MeasureMatrix& m, bool percent, bool with_mean) {
    std::size_t label_w = 7;
    for (const auto& c : m.measures) label_w = std::max(label_w, c.label().size());
    std::ostringstream out;
    const auto cell = [&](double v) {
        if (std::isnan(v)) return std::string("NA");
        return percent ? format_fixed(100.0 * v, 1) + "%" : format_fixed(v, 2);
    };
    std::vector<std::size_t> widths;
    out << pad("measure", label_w, true);
    for (const auto& c : m.measures) {
        widths.push_back(std::max<std::size_t>(c.label().size(), 6));
        out << "  " << pad(c.label(), widths.back(), false);
    }
    if (with_mean) out << "  " << pad("mean", 6, false);
    out << '\n';
    for (std::size_t i = 0; i < m.measures.size(); ++i) {
        out << pad(m.measures[i].label(), label_w, true);
        for (std::size_t j = 0; j < m.measures.size(); ++j) {
            const std::string text = (with_mean && i == j) ? "--" : cell(m.values[i][j]);
            out << "  " << pad(text, widths[j], false);
        }
        if (with_mean) out << "  " << pad(cell(m.row_mean(i)), 6, false);
        out << '\n';
    }
    out << "(" << m.units << " units";
    if (!m.skipped.empty()) out << ", " << m.skipped.size() << " skipped";
    out << ")\n";
    return out.str();
}

std::string format_band_csv(const RocBand& band) {
    std::ostringstream out;
    out << "fpr,tpr_mean,tpr_std,ratio_mean,ratio_std\n";
    for (std::size_t i = 0; i < band.fpr.size(); ++i) {
        out << format_exact(band.fpr[i]) << ',' << format_exact(band.tpr_mean[i]) << ','
            << format_exact(band.tpr_std[i]) << ',' << format_exact(band.ratio_mean[i]) << ','
            << format_exact(band.ratio_std[i]) << '\n';
    }
    return out.str();
}

}  // namespace admeasures
