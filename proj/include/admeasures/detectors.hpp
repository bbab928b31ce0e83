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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "admeasures/common.hpp"
#include "admeasures/volume.hpp"

namespace admeasures {

/// A fitted anomaly detector. Fitted models are immutable, so `score` and
/// `score_batch` may be called from any number of threads.
class Detector {
public:
    virtual ~Detector() = default;

    [[nodiscard]] virtual double score(std::span<const double> x) const = 0;

    /// Scores every row of `points`. The parallel path splits rows across
    /// OpenMP threads and returns the same values as the serial path.
    [[nodiscard]] std::vector<double> score_batch(const Matrix& points, Execution exec = Execution::parallel) const;

    [[nodiscard]] virtual std::size_t dim() const noexcept = 0;

    /// Adapts the detector to the volume module's decision-function type.
    /// The detector must outlive the returned function.
    [[nodiscard]] ScoreFunction as_score_function() const;

protected:
    void check_dim(std::span<const double> x) const;
};

// ---------------------------------------------------------------------------
// k nearest neighbours

enum class KnnVariant {
    kappa,  // distance to the k-th neighbour
    gamma,  // mean distance to the k neighbours
    delta,  // length of the mean vector from x to its k neighbours
};

std::string_view to_string(KnnVariant v) noexcept;
KnnVariant parse_knn_variant(std::string_view name);

/// Brute-force Euclidean kNN. Exactly k neighbours are used; ties at the
/// k-th position go to the lower training index.
class KnnModel final : public Detector {
public:
    KnnModel(Matrix train, std::size_t k, KnnVariant variant);

    [[nodiscard]] double score(std::span<const double> x) const override;
    [[nodiscard]] std::size_t dim() const noexcept override { return train_.cols(); }
    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] KnnVariant variant() const noexcept { return variant_; }

private:
    Matrix train_;
    std::size_t k_;
    KnnVariant variant_;
};

// ---------------------------------------------------------------------------
// Local outlier factor

/// LOF with tie-inclusive k-neighbourhoods. The training set's k-distances
/// and local reachability densities are computed at fit time; queries are
/// treated as out-of-sample points whose neighbours come from the training
/// set only.
///
/// A neighbourhood whose reachability distances sum to zero (repeated rows)
/// would have infinite density; densities are clamped to
/// 1 / (1e-12 * diameter) instead.
class LofModel final : public Detector {
public:
    LofModel(Matrix train, std::size_t k, Execution exec = Execution::parallel);

    [[nodiscard]] double score(std::span<const double> x) const override;
    [[nodiscard]] std::size_t dim() const noexcept override { return train_.cols(); }

    [[nodiscard]] std::span<const double> k_distances() const noexcept { return k_dist_; }
    [[nodiscard]] std::span<const double> densities() const noexcept { return lrd_; }
    [[nodiscard]] double density_cap() const noexcept { return lrd_cap_; }

private:
    double clamp_density(std::size_t count, double reach_sum) const noexcept;

    Matrix train_;
    std::size_t k_;
    std::vector<double> k_dist_;
    std::vector<double> lrd_;
    double lrd_cap_ = 0.0;
};

// ---------------------------------------------------------------------------
// Isolation forest

struct IsolationForestParams {
    std::size_t n_trees = 100;
    /// Subsample size per tree; clipped to the sample count.
    std::size_t subsample = 256;
    std::uint64_t seed = 0;
};

struct IsolationNode {
    static constexpr std::int32_t kLeaf = -1;

    std::int32_t dim = kLeaf;
    double split = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t size = 0;  // training samples reaching a leaf
};

struct IsolationTree {
    std::vector<IsolationNode> nodes;  // nodes[0] is the root
};

/// Average path length of an unsuccessful BST search among n points:
/// c(n) = 2 H(n - 1) - 2 (n - 1) / n with H(i) = ln(i) + Euler's constant,
/// c(2) = 1 and c(n) = 0 for n < 2.
double average_path_length(std::size_t n) noexcept;

class IsolationForestModel final : public Detector {
public:
    /// Builds n_trees trees on independent subsamples. Each node picks a
    /// dimension uniformly among those with nonzero extent in the node and a
    /// split uniformly inside that extent; growth stops at single samples,
    /// identical samples, or depth ceil(log2 subsample). Trees are built in
    /// parallel from per-tree seeds, so the forest does not depend on `exec`.
    static IsolationForestModel fit(const Matrix& data, const IsolationForestParams& params,
                                    Execution exec = Execution::parallel);

    /// 2^(-E[h(x)] / c(subsample)), in (0, 1).
    [[nodiscard]] double score(std::span<const double> x) const override;
    [[nodiscard]] std::size_t dim() const noexcept override { return dim_; }

    /// Mean path length over the trees, leaf sizes adjusted by c(size).
    [[nodiscard]] double mean_path_length(std::span<const double> x) const;

    [[nodiscard]] std::span<const IsolationTree> trees() const noexcept { return trees_; }
    [[nodiscard]] std::size_t subsample() const noexcept { return subsample_; }
    [[nodiscard]] std::size_t height_limit() const noexcept { return height_limit_; }

private:
    IsolationForestModel() = default;

    std::vector<IsolationTree> trees_;
    std::size_t subsample_ = 0;
    std::size_t height_limit_ = 0;
    std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Externally computed scores

/// Scores produced outside this library (OC-SVM and the like), keyed by
/// sample id. Loaded from an `id,score` file with a header row.
class ExternalScores {
public:
    explicit ExternalScores(std::map<std::string, double> scores) : scores_(std::move(scores)) {}

    static ExternalScores load(const std::filesystem::path& path);

    [[nodiscard]] std::size_t size() const noexcept { return scores_.size(); }

    /// Throws std::out_of_range naming the id when it is absent.
    [[nodiscard]] double at(const std::string& id) const;

    /// Scores for `ids` in order; the error names the first missing id.
    [[nodiscard]] std::vector<double> lookup(std::span<const std::string> ids) const;

private:
    std::map<std::string, double> scores_;
};

// ---------------------------------------------------------------------------
// Grid-level description of a detector configuration

enum class DetectorKind { knn, lof, iforest };

std::string_view to_string(DetectorKind kind) noexcept;
DetectorKind parse_detector_kind(std::string_view name);

struct DetectorSpec {
    DetectorKind kind = DetectorKind::knn;
    std::size_t k = 1;
    KnnVariant variant = KnnVariant::kappa;
    std::size_t n_trees = 100;
    std::size_t subsample = 256;

    /// Hyperparameter assignment, e.g. "variant=gamma;k=5".
    [[nodiscard]] std::string params() const;
    [[nodiscard]] std::string name() const { return std::string(to_string(kind)); }

    friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

/// Inverse of DetectorSpec::params() for a given kind.
DetectorSpec parse_detector_spec(std::string_view kind, std::string_view params);

/// Fits the configured detector on `train`. `seed` only matters for the
/// isolation forest.
std::unique_ptr<Detector> fit_detector(const DetectorSpec& spec, const Matrix& train, std::uint64_t seed,
                                       Execution exec = Execution::parallel);

}  // namespace admeasures
