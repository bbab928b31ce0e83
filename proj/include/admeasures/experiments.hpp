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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "admeasures/datasets.hpp"
#include "admeasures/detectors.hpp"
#include "admeasures/volume.hpp"

namespace admeasures {

// ---------------------------------------------------------------------------
// Measures

enum class MeasureKind { auc, auc_w, auc_at, tpr_at, precision_at, f1_at, cvol_at };

/// One column of an experiment record. Every measure is maximized; CVOL is
/// stored instead of VOL for that reason.
struct MeasureId {
    MeasureKind kind = MeasureKind::auc;
    double level = 0.0;  // alpha or p; 0 for auc and auc_w

    [[nodiscard]] bool parameterized() const noexcept { return kind != MeasureKind::auc && kind != MeasureKind::auc_w; }

    /// Column name, e.g. "auc", "auc_w", "tpr_at_0.05".
    [[nodiscard]] std::string name() const;

    /// Display label in table headers, e.g. "AUC@0.05".
    [[nodiscard]] std::string label() const;

    static MeasureId parse(std::string_view name);

    friend bool operator==(const MeasureId&, const MeasureId&) = default;
};

/// The measure list in table order: AUC, AUC_w, then AUC@a, precision@p,
/// TPR@a, F1@a, CVOL@a, each at every level (levels in descending order).
std::vector<MeasureId> standard_measures(std::span<const double> alphas, std::span<const double> p_levels);

// ---------------------------------------------------------------------------
// Grid configuration

struct GridConfig {
    std::vector<DetectorSpec> detectors;  // expanded grid, in grid order
    std::vector<double> alphas{0.05, 0.01};
    std::vector<double> p_levels{0.05, 0.01};
    std::vector<double> contaminations{0.0, 0.01, 0.05};
    int repetitions = 10;
    std::size_t volume_samples = 100000;
    int precision_rounds = 10;
    double train_fraction = 0.8;
    std::uint64_t master_seed = 0;
    /// Also evaluate every measure on a validation half of the test fold so
    /// that selection can be done on data disjoint from the target.
    bool validation_split = false;

    [[nodiscard]] std::vector<MeasureId> measures() const { return standard_measures(alphas, p_levels); }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

/// kNN {kappa, gamma, delta} x k {1,3,5,7,9,13,21,31,51}; LOF k {10,20,50};
/// isolation forest n_trees {50,100,200}.
std::vector<DetectorSpec> default_detector_grid();

// ---------------------------------------------------------------------------
// Records

struct CellKey {
    std::string benchmark;  // BenchmarkDataset::id()
    std::string detector;
    std::string params;
    double contamination = 0.0;
    int repetition = 0;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct ExperimentRecord {
    std::string dataset;        // source table
    std::string anomaly_class;
    std::string detector;
    std::string params;
    std::size_t combo = 0;      // position in the detector grid
    double contamination = 0.0;
    int repetition = 0;
    std::string status = "ok";  // "ok" or a reason the cell is missing
    std::vector<double> values;             // aligned with RecordSet::measures, NaN = missing
    std::vector<double> validation_values;  // empty unless the grid used a validation split

    [[nodiscard]] std::string benchmark() const { return dataset + "-" + anomaly_class; }
    [[nodiscard]] CellKey key() const { return {benchmark(), detector, params, contamination, repetition}; }
    [[nodiscard]] bool ok() const noexcept { return status == "ok"; }
};

struct RecordSet {
    std::vector<MeasureId> measures;
    std::vector<ExperimentRecord> records;

    [[nodiscard]] std::optional<std::size_t> measure_index(const MeasureId& m) const;

    /// Sorts records by (benchmark, combo, contamination, repetition).
    void sort();
};

/// Evaluates one grid cell: split, fit on the training fold, score the test
/// fold, compute every measure. Failures come back as a record whose status
/// says why and whose values are NaN.
ExperimentRecord evaluate_cell(const BenchmarkDataset& bench, const SamplingBox& box, const DetectorSpec& detector,
                               std::size_t combo, double contamination, int repetition, const GridConfig& cfg,
                               Execution exec = Execution::serial);

/// Seed of the train/test split of (dataset, repetition), where the dataset
/// is the source table. Shared by every detector, hyperparameter value and
/// anomaly class of the table.
std::uint64_t split_seed(std::uint64_t master, const std::string& dataset, int repetition);

/// Seed of a detector fitted on the split with seed `split`.
std::uint64_t detector_seed(std::uint64_t split, const DetectorSpec& spec);

/// Seed of the volume sampling points of a benchmark; shared by every cell.
std::uint64_t volume_seed(std::uint64_t master, const std::string& benchmark);

struct GridProgress {
    std::size_t done = 0;
    std::size_t total = 0;
    const ExperimentRecord* record = nullptr;
};

struct GridResult {
    RecordSet records;        // existing plus new, sorted
    std::size_t new_cells = 0;
    std::size_t missing_cells = 0;  // records whose status is not ok
};

/// Runs every (benchmark x detector x contamination x repetition) cell not
/// already in `existing`. Cells are distributed over OpenMP threads; seeds
/// depend only on the cell, so output does not depend on the worker count.
GridResult run_grid(const GridConfig& cfg, std::span<const BenchmarkDataset> benchmarks,
                    const RecordSet& existing = {}, const std::function<void(const GridProgress&)>& progress = {},
                    Execution exec = Execution::parallel);

/// Mean of every measure over repetitions, one row per
/// (benchmark, combo, contamination). A mean is NaN when any repetition is
/// missing.
RecordSet repetition_means(const RecordSet& records);

// ---------------------------------------------------------------------------
// Record store: one file per (benchmark, detector) under `dir`.

void write_record_store(const std::filesystem::path& dir, const RecordSet& records, std::string_view manifest_hash);
RecordSet read_record_store(const std::filesystem::path& dir);

/// Serializes the records of one file (header comment, column row, rows).
std::string format_records(const RecordSet& records, std::span<const std::size_t> rows,
                           std::string_view manifest_hash);

// ---------------------------------------------------------------------------
// Aggregation

/// Per-benchmark table of repetition-averaged measure values for one
/// contamination level, combos in grid order.
struct ComboValues {
    std::size_t combo = 0;
    std::string detector;
    std::string params;
    std::vector<double> values;
    std::vector<double> validation_values;
};

struct BenchmarkGrid {
    std::string benchmark;
    std::string dataset;
    std::string anomaly_class;
    std::vector<ComboValues> combos;
};

std::vector<BenchmarkGrid> averaged_grid(const RecordSet& records, double contamination);

/// Thrown when an aggregation needs cells the record set does not hold.
class IncompleteRecords : public std::runtime_error {
public:
    IncompleteRecords(const std::string& what, std::vector<std::string> missing)
        : std::runtime_error(what), missing_(std::move(missing)) {}
    [[nodiscard]] const std::vector<std::string>& missing() const noexcept { return missing_; }

private:
    std::vector<std::string> missing_;
};

enum class RankMode {
    best_hyperparameter,  // each detector represented by its best combo
    mean_hyperparameter,  // each detector represented by the mean over its combos
};

struct RankRow {
    MeasureId measure;
    std::vector<double> mean;  // per detector
    std::vector<double> std;   // population standard deviation across benchmarks
};

struct RankTable {
    std::vector<std::string> detectors;
    std::vector<RankRow> rows;
    std::size_t benchmarks = 0;
};

/// Fractional ranks (1 = largest value, ties share the mean rank).
std::vector<double> fractional_ranks_descending(std::span<const double> values);

RankRow mean_rank_row(const std::vector<BenchmarkGrid>& grid, std::span<const MeasureId> measures,
                      std::size_t measure, RankMode mode, std::span<const std::string> detectors);

RankTable mean_rank_table(const RecordSet& records, double contamination, RankMode mode = RankMode::best_hyperparameter);

/// Kendall tau-b by exhaustive pair comparison; nullopt when either input is
/// constant (undefined).
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

struct MeasureMatrix {
    std::vector<MeasureId> measures;
    std::vector<std::vector<double>> values;       // [row][col]
    std::vector<std::vector<std::size_t>> counts;  // benchmarks (or pairs) contributing to each cell
    std::size_t units = 0;                         // benchmarks or anomaly-class pairs considered
    std::vector<std::string> skipped;              // units excluded entirely, with reason

    /// Mean of the off-diagonal entries of a row (the "mean" column).
    [[nodiscard]] double row_mean(std::size_t row) const;
};

/// Dataset-averaged tau-b between every pair of measures over all combos.
/// Pairs undefined on a benchmark are left out of that cell's average.
MeasureMatrix kendall_matrix(const RecordSet& records, double contamination);

/// (c_best - c_used) / c_best, 0 when c_best == 0.
double relative_loss(double best, double used) noexcept;

/// Index of the first combo maximizing `select` among those where both
/// `select` and `target` are present; nullopt if none.
std::optional<std::size_t> select_combo(std::span<const double> select, std::span<const double> target);

/// Mean relative loss in the column measure when the combo is chosen by the
/// row measure, per benchmark then averaged. With `use_validation` the
/// selection reads the validation-fold values.
MeasureMatrix loss_matrix(const RecordSet& records, double contamination, bool use_validation = false);

/// For every table with at least two anomaly classes and every ordered pair
/// of distinct classes (a, b): select on class a, lose on class b.
MeasureMatrix multiclass_sensitivity(const RecordSet& records, double contamination);

// ---------------------------------------------------------------------------
// ROC noise band

struct RocBand {
    std::vector<double> fpr;
    std::vector<double> tpr_mean;
    std::vector<double> tpr_std;
    std::vector<double> ratio_mean;  // TPR / FPR, 0 at FPR = 0
    std::vector<double> ratio_std;
    std::size_t curves = 0;
    std::size_t skipped = 0;  // degenerate splits
};

/// ROC curves of `detector` over one split per seed, evaluated on the union
/// of their FPR knots. Standard deviations use the n - 1 denominator.
RocBand roc_band(const DetectorSpec& detector, const BenchmarkDataset& bench, std::span<const std::uint64_t> seeds,
                 double contamination = 0.0, double train_fraction = 0.8, Execution exec = Execution::parallel);

/// Convenience form: seeds derived from `master_seed` for splits 0..n-1.
RocBand roc_band(const DetectorSpec& detector, const BenchmarkDataset& bench, std::size_t n_splits,
                 std::uint64_t master_seed, double contamination = 0.0, double train_fraction = 0.8,
                 Execution exec = Execution::parallel);

// ---------------------------------------------------------------------------
// Table output

std::string format_rank_csv(const RankTable& table);
std::string format_rank_text(const RankTable& table);

/// `percent` renders values as percentages (loss tables).
std::string format_matrix_csv(const MeasureMatrix& m);
std::string format_matrix_text(const MeasureMatrix& m, bool percent, bool with_mean);

std::string format_band_csv(const RocBand& band);

}  // namespace admeasures
