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
#include <string>
#include <vector>

#include "admeasures/common.hpp"

namespace admeasures {

/// A labeled multiclass table: features plus one class name per row.
struct RawTable {
    std::string name;
    Matrix features;
    std::vector<std::string> classes;
};

/// Normal samples paired with one anomaly class.
struct BenchmarkDataset {
    std::string table;          // source table name
    std::string anomaly_class;  // class used as anomalies
    Matrix normal;
    Matrix anomaly;

    /// "<table>-<anomaly class>"
    [[nodiscard]] std::string id() const { return table + "-" + anomaly_class; }

    /// All samples, normals first. The volume sampling box is computed from
    /// this matrix.
    [[nodiscard]] Matrix all_samples() const { return Matrix::stack(normal, anomaly); }

    /// C = P / (P + N) over the whole benchmark.
    [[nodiscard]] double contamination() const;
};

/// P / (P + N).
double contamination_rate(std::size_t positives, std::size_t negatives);

/// Reads a table whose last column is named `class`. The table name is the
/// file stem. Errors name the offending line.
RawTable read_table(const std::filesystem::path& path);

/// One benchmark per non-majority class, all sharing the largest class as
/// normals. Ties for the largest class go to the lexicographically smallest
/// name; benchmarks are ordered by anomaly class name.
std::vector<BenchmarkDataset> make_benchmarks(const RawTable& table);

/// Rescales every feature of `table` to [0, 1] (constant features map to 0).
void min_max_scale(RawTable& table);

struct SplitSpec {
    double train_fraction = 0.8;  // share of normals used for training
    double contamination = 0.0;   // anomaly share in the training set, in [0, 0.5)
    std::uint64_t seed = 0;       // already derived for the repetition
};

struct Split {
    Matrix train;              // unlabeled; normals first, then injected anomalies
    Matrix test;               // normals first, then anomalies
    std::vector<int> test_labels;
    std::vector<std::size_t> train_normals;   // indices into bench.normal
    std::vector<std::size_t> test_normals;
    std::vector<std::size_t> train_anomalies; // indices into bench.anomaly
    std::vector<std::size_t> test_anomalies;
};

/// Seeded split. Normals are shuffled and cut at round(train_fraction * N);
/// round(c * n_train / (1 - c)) anomalies join the training set and the rest
/// go to the test set. Throws when the requested contamination needs more
/// anomalies than exist.
Split split(const BenchmarkDataset& bench, const SplitSpec& spec);

/// Training anomaly count for contamination c over n training normals.
std::size_t training_anomaly_count(std::size_t n_train_normal, double contamination);

/// Standard Gaussian normals; anomalies shifted by `shift` along the first
/// axis.
BenchmarkDataset synth_gaussian(std::size_t n_normal, std::size_t n_anomaly, std::size_t d, double shift,
                                std::uint64_t seed);

/// Gaussian blobs, one per class, with centers spread `separation` apart on
/// a circle in the first two axes. Class i is named "c<i>"; class 0 is the
/// largest when `sizes` is sorted descending.
RawTable synth_multiclass_table(const std::string& name, const std::vector<std::size_t>& sizes, std::size_t d,
                                double separation, std::uint64_t seed);

/// Writes `table` in the format read_table expects.
void write_table(const std::filesystem::path& path, const RawTable& table);

/// Benchmark cache: `<root>/<table>/<anomaly class>/{normal,anomaly}.csv`.
void save_benchmark(const std::filesystem::path& root, const BenchmarkDataset& bench);
BenchmarkDataset load_benchmark(const std::filesystem::path& dir);

/// Loads every benchmark in a cache directory, ordered by (table, class).
std::vector<BenchmarkDataset> load_benchmark_cache(const std::filesystem::path& root);

}  // namespace admeasures
