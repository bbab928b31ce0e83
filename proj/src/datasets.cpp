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

#include "admeasures/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "admeasures/io.hpp"

namespace admeasures {

double contamination_rate(std::size_t positives, std::size_t negatives) {
    const std::size_t total = positives + negatives;
    if (total == 0) return 0.0;
    return static_cast<double>(positives) / static_cast<double>(total);
}

double BenchmarkDataset::contamination() const { return contamination_rate(anomaly.rows(), normal.rows()); }

RawTable read_table(const std::filesystem::path& path) {
    const auto csv = read_csv(path);
    if (csv.header.size() < 2 || csv.header.back() != "class") {
        throw FormatError(path.string() + ": expected at least one feature column and a final 'class' column");
    }
    RawTable table;
    table.name = path.stem().string();
    const std::size_t d = csv.header.size() - 1;
    table.features = Matrix(0, d);
    std::vector<double> row(d);
    for (const auto& r : csv.rows) {
        const auto loc = path.string() + ":" + std::to_string(r.line);
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = parse_double(r.fields[j], loc);
            if (!std::isfinite(row[j])) throw FormatError(loc + ": missing or non-finite value");
        }
        if (r.fields[d].empty()) throw FormatError(loc + ": empty class label");
        table.features.append_row(row);
        table.classes.push_back(r.fields[d]);
    }
    if (table.classes.empty()) throw FormatError(path.string() + ": table has no rows");
    return table;
}

std::vector<BenchmarkDataset> make_benchmarks(const RawTable& table) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < table.classes.size(); ++i) by_class[table.classes[i]].push_back(i);
    if (by_class.size() < 2) {
        throw std::invalid_argument("make_benchmarks: table '" + table.name + "' has fewer than two classes");
    }

    // std::map iterates in name order, so the first maximum wins ties.
    auto normal_it = by_class.begin();
    for (auto it = by_class.begin(); it != by_class.end(); ++it) {
        if (it->second.size() > normal_it->second.size()) normal_it = it;
    }
    const Matrix normal = table.features.select_rows(normal_it->second);

    std::vector<BenchmarkDataset> out;
    for (const auto& [name, rows] : by_class) {
        if (name == normal_it->first) continue;
        out.push_back({table.name, name, normal, table.features.select_rows(rows)});
    }
    return out;
}

void min_max_scale(RawTable& table) {
    auto& m = table.features;
    if (m.rows() == 0) return;
    for (std::size_t j = 0; j < m.cols(); ++j) {
        double lo = m(0, j);
        double hi = m(0, j);
        for (std::size_t i = 1; i < m.rows(); ++i) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
        const double width = hi - lo;
        for (std::size_t i = 0; i < m.rows(); ++i) m(i, j) = width > 0.0 ? (m(i, j) - lo) / width : 0.0;
    }
}

std::size_t training_anomaly_count(std::size_t n_train_normal, double contamination) {
    if (!(contamination >= 0.0 && contamination < 1.0)) {
        throw std::invalid_argument("contamination must lie in [0, 1)");
    }
    return static_cast<std::size_t>(
        std::llround(contamination * static_cast<double>(n_train_normal) / (1.0 - contamination)));
}

Split split(const BenchmarkDataset& bench, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw std::invalid_argument("split: train fraction must lie in (0, 1)");
    }
    if (!(spec.contamination >= 0.0 && spec.contamination < 0.5)) {
        throw std::invalid_argument("split: contamination must lie in [0, 0.5)");
    }
    const std::size_t n_normal = bench.normal.rows();
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n_normal)));
    if (n_train == 0 || n_train == n_normal) {
        throw std::invalid_argument("split: benchmark '" + bench.id() + "' has too few normals (" +
                                    std::to_string(n_normal) + ") for a train/test split");
    }
    const std::size_t n_inject = training_anomaly_count(n_train, spec.contamination);
    if (n_inject > bench.anomaly.rows()) {
        throw std::invalid_argument("split: contamination " + std::to_string(spec.contamination) + " needs " +
                                    std::to_string(n_inject) + " training anomalies but benchmark '" + bench.id() +
                                    "' has " + std::to_string(bench.anomaly.rows()));
    }

    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> normals(n_normal);
    std::iota(normals.begin(), normals.end(), std::size_t{0});
    std::shuffle(normals.begin(), normals.end(), rng);
    std::vector<std::size_t> anomalies(bench.anomaly.rows());
    std::iota(anomalies.begin(), anomalies.end(), std::size_t{0});
    std::shuffle(anomalies.begin(), anomalies.end(), rng);

    Split s;
    s.train_normals.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test_normals.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train), normals.end());
    s.train_anomalies.assign(anomalies.begin(), anomalies.begin() + static_cast<std::ptrdiff_t>(n_inject));
    s.test_anomalies.assign(anomalies.begin() + static_cast<std::ptrdiff_t>(n_inject), anomalies.end());

    s.train = Matrix::stack(bench.normal.select_rows(s.train_normals), bench.anomaly.select_rows(s.train_anomalies));
    if (s.train.empty()) s.train = Matrix(0, bench.normal.cols());
    s.test = Matrix::stack(bench.normal.select_rows(s.test_normals), bench.anomaly.select_rows(s.test_anomalies));
    s.test_labels.assign(s.test_normals.size(), 0);
    s.test_labels.resize(s.test_normals.size() + s.test_anomalies.size(), 1);
    return s;
}

BenchmarkDataset synth_gaussian(std::size_t n_normal, std::size_t n_anomaly, std::size_t d, double shift,
                                std::uint64_t seed) {
    if (n_normal == 0 || d == 0) throw std::invalid_argument("synth_gaussian: need n_normal >= 1 and d >= 1");
    if (shift < 0.0) throw std::invalid_argument("synth_gaussian: shift must be nonnegative");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    BenchmarkDataset b;
    b.table = "gauss";
    b.anomaly_class = "shifted";
    b.normal = Matrix(n_normal, d);
    b.anomaly = Matrix(n_anomaly, d);
    for (std::size_t i = 0; i < n_normal; ++i) {
        for (std::size_t j = 0; j < d; ++j) b.normal(i, j) = gauss(rng);
    }
    for (std::size_t i = 0; i < n_anomaly; ++i) {
        for (std::size_t j = 0; j < d; ++j) b.anomaly(i, j) = gauss(rng) + (j == 0 ? shift : 0.0);
    }
    return b;
}

RawTable synth_multiclass_table(const std::string& name, const std::vector<std::size_t>& sizes, std::size_t d,
                                double separation, std::uint64_t seed) {
    if (sizes.size() < 2 || d == 0) throw std::invalid_argument("synth_multiclass_table: need >= 2 classes, d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    RawTable t;
    t.name = name;
    t.features = Matrix(0, d);
    std::vector<double> center(d, 0.0);
    std::vector<double> row(d);
    const std::size_t others = sizes.size() - 1;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        std::fill(center.begin(), center.end(), 0.0);
        if (c > 0) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c - 1) / static_cast<double>(others);
            center[0] = separation * std::cos(angle);
            if (d > 1) center[1] = separation * std::sin(angle);
        }
        for (std::size_t i = 0; i < sizes[c]; ++i) {
            for (std::size_t j = 0; j < d; ++j) row[j] = center[j] + gauss(rng);
            t.features.append_row(row);
            t.classes.push_back("c" + std::to_string(c));
        }
    }
    return t;
}

void write_table(const std::filesystem::path& path, const RawTable& table) {
    std::ostringstream out;
    for (std::size_t j = 0; j < table.features.cols(); ++j) out << 'x' << (j + 1) << ',';
    out << "class\n";
    for (std::size_t i = 0; i < table.features.rows(); ++i) {
        for (const double v : table.features.row(i)) out << format_exact(v) << ',';
        out << table.classes[i] << '\n';
    }
    write_file_atomic(path, out.str());
}

void save_benchmark(const std::filesystem::path& root, const BenchmarkDataset& bench) {
    const auto dir = root / bench.table / bench.anomaly_class;
    write_matrix(dir / "normal.csv", bench.normal);
    write_matrix(dir / "anomaly.csv", bench.anomaly);
}

BenchmarkDataset load_benchmark(const std::filesystem::path& dir) {
    BenchmarkDataset b;
    b.anomaly_class = dir.filename().string();
    b.table = dir.parent_path().filename().string();
    b.normal = read_matrix(dir / "normal.csv");
    b.anomaly = read_matrix(dir / "anomaly.csv");
    if (b.normal.cols() != b.anomaly.cols()) {
        throw FormatError(dir.string() + ": normal and anomaly files disagree on the number of features");
    }
    return b;
}

std::vector<BenchmarkDataset> load_benchmark_cache(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) throw FormatError("benchmark cache not found: " + root.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& table : std::filesystem::directory_iterator(root)) {
        if (!table.is_directory()) continue;
        for (const auto& cls : std::filesystem::directory_iterator(table.path())) {
            if (cls.is_directory() && std::filesystem::exists(cls.path() / "normal.csv")) dirs.push_back(cls.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<BenchmarkDataset> out;
    out.reserve(dirs.size());
    for (const auto& d : dirs) out.push_back(load_benchmark(d));
    return out;
}

}  // namespace admeasures
