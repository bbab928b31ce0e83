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

#include "admeasures/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

#include "admeasures/io.hpp"

namespace admeasures {

namespace {

using DistIndex = std::pair<double, std::size_t>;

// Distances from x to every row of `train`, in training order.
void distances_to(const Matrix& train, std::span<const double> x, std::vector<double>& out) {
    out.resize(train.rows());
    for (std::size_t i = 0; i < train.rows(); ++i) out[i] = euclidean_distance(train.row(i), x);
}

// k-th smallest value of `dist` (1-based k), leaving `scratch` permuted.
double kth_smallest(const std::vector<double>& dist, std::size_t k, std::vector<double>& scratch) {
    scratch.assign(dist.begin(), dist.end());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k - 1), scratch.end());
    return scratch[k - 1];
}

std::string knn_variant_list() { return "kappa, gamma, delta"; }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> Detector::score_batch(const Matrix& points, Execution exec) const {
    std::vector<double> out(points.rows());
    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < points.rows(); ++i) out[i] = score(points.row(i));
        return out;
    }
    const auto n = static_cast<std::ptrdiff_t>(points.rows());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = score(points.row(static_cast<std::size_t>(i)));
    }
    return out;
}

ScoreFunction Detector::as_score_function() const {
    return [this](std::span<const double> x) { return score(x); };
}

void Detector::check_dim(std::span<const double> x) const {
    if (x.size() != dim()) {
        throw std::invalid_argument("detector expects " + std::to_string(dim()) + "-dimensional points, got " +
                                    std::to_string(x.size()));
    }
}

// ---------------------------------------------------------------------------

std::string_view to_string(KnnVariant v) noexcept {
    switch (v) {
        case KnnVariant::kappa: return "kappa";
        case KnnVariant::gamma: return "gamma";
        case KnnVariant::delta: return "delta";
    }
    return "?";
}

KnnVariant parse_knn_variant(std::string_view name) {
    if (name == "kappa") return KnnVariant::kappa;
    if (name == "gamma") return KnnVariant::gamma;
    if (name == "delta") return KnnVariant::delta;
    throw std::invalid_argument("unknown kNN variant '" + std::string(name) + "' (expected " + knn_variant_list() +
                                ")");
}

KnnModel::KnnModel(Matrix train, std::size_t k, KnnVariant variant)
    : train_(std::move(train)), k_(k), variant_(variant) {
    if (train_.rows() == 0) throw std::invalid_argument("KnnModel: empty training set");
    if (k_ == 0 || k_ > train_.rows()) {
        throw std::invalid_argument("KnnModel: k = " + std::to_string(k_) + " must lie in [1, " +
                                    std::to_string(train_.rows()) + "]");
    }
}

double KnnModel::score(std::span<const double> x) const {
    check_dim(x);
    thread_local std::vector<DistIndex> nearest;
    nearest.resize(train_.rows());
    for (std::size_t i = 0; i < train_.rows(); ++i) nearest[i] = {euclidean_distance(train_.row(i), x), i};
    // Pair ordering breaks distance ties by the lower training index.
    std::partial_sort(nearest.begin(), nearest.begin() + static_cast<std::ptrdiff_t>(k_), nearest.end());

    switch (variant_) {
        case KnnVariant::kappa:
            return nearest[k_ - 1].first;
        case KnnVariant::gamma: {
            double sum = 0.0;
            for (std::size_t i = 0; i < k_; ++i) sum += nearest[i].first;
            return sum / static_cast<double>(k_);
        }
        case KnnVariant::delta: {
            thread_local std::vector<double> mean;
            mean.assign(x.size(), 0.0);
            for (std::size_t i = 0; i < k_; ++i) {
                const auto y = train_.row(nearest[i].second);
                for (std::size_t j = 0; j < x.size(); ++j) mean[j] += y[j] - x[j];
            }
            double norm = 0.0;
            for (double& m : mean) {
                m /= static_cast<double>(k_);
                norm += m * m;
            }
            return std::sqrt(norm);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------

LofModel::LofModel(Matrix train, std::size_t k, Execution exec) : train_(std::move(train)), k_(k) {
    const std::size_t n = train_.rows();
    if (k_ == 0 || k_ >= n) {
        throw std::invalid_argument("LofModel: k = " + std::to_string(k_) + " must lie in [1, " +
                                    std::to_string(n == 0 ? 0 : n - 1) + "]");
    }

    // Pairwise distances; row i holds d(i, j) for all j.
    std::vector<double> dist(n * n, 0.0);
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Execution::parallel)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = euclidean_distance(train_.row(i), train_.row(j));
    }
    const double diameter = *std::max_element(dist.begin(), dist.end());
    lrd_cap_ = 1.0 / (1e-12 * (diameter > 0.0 ? diameter : 1.0));

    // k-distance of each training point among the other training points.
    k_dist_.assign(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Execution::parallel)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        std::vector<double> others;
        others.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(dist[i * n + j]);
        }
        std::nth_element(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k_ - 1), others.end());
        k_dist_[i] = others[k_ - 1];
    }

    lrd_.assign(n, 0.0);
#pragma omp parallel for schedule(dynamic, 8) if (exec == Execution::parallel)
    for (std::ptrdiff_t si = 0; si < sn; ++si) {
        const auto i = static_cast<std::size_t>(si);
        std::size_t count = 0;
        double reach = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = dist[i * n + j];
            if (j == i || d > k_dist_[i]) continue;
            ++count;
            reach += std::max(k_dist_[j], d);
        }
        lrd_[i] = clamp_density(count, reach);
    }
}

double LofModel::clamp_density(std::size_t count, double reach_sum) const noexcept {
    if (reach_sum <= 0.0) return lrd_cap_;
    return std::min(static_cast<double>(count) / reach_sum, lrd_cap_);
}

double LofModel::score(std::span<const double> x) const {
    check_dim(x);
    thread_local std::vector<double> dist;
    thread_local std::vector<double> scratch;
    distances_to(train_, x, dist);
    const double kd = kth_smallest(dist, k_, scratch);

    std::size_t count = 0;
    double reach = 0.0;
    double neighbour_density = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
        if (dist[j] > kd) continue;
        ++count;
        reach += std::max(k_dist_[j], dist[j]);
        neighbour_density += lrd_[j];
    }
    const double own = clamp_density(count, reach);
    return neighbour_density / (own * static_cast<double>(count));
}

// ---------------------------------------------------------------------------

double average_path_length(std::size_t n) noexcept {
    if (n < 2) return 0.0;
    if (n == 2) return 1.0;
    constexpr double euler_gamma = 0.5772156649015329;
    const auto m = static_cast<double>(n - 1);
    return 2.0 * (std::log(m) + euler_gamma) - 2.0 * m / static_cast<double>(n);
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& data, std::size_t height_limit, std::mt19937_64& rng)
        : data_(data), height_limit_(height_limit), rng_(rng) {}

    IsolationTree build(std::vector<std::size_t> rows) {
        IsolationTree tree;
        grow(tree, rows, 0, rows.size(), 0);
        return tree;
    }

private:
    std::int32_t grow(IsolationTree& tree, std::vector<std::size_t>& rows, std::size_t begin, std::size_t end,
                      std::size_t depth) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t count = end - begin;

        const auto make_leaf = [&] {
            tree.nodes[static_cast<std::size_t>(id)].size = static_cast<std::uint32_t>(count);
            return id;
        };
        if (count <= 1 || depth >= height_limit_) return make_leaf();

        // Dimensions with nonzero extent inside the node.
        const std::size_t d = data_.cols();
        lo_.assign(d, 0.0);
        hi_.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            lo_[j] = hi_[j] = data_(rows[begin], j);
        }
        for (std::size_t r = begin + 1; r < end; ++r) {
            for (std::size_t j = 0; j < d; ++j) {
                const double v = data_(rows[r], j);
                lo_[j] = std::min(lo_[j], v);
                hi_[j] = std::max(hi_[j], v);
            }
        }
        candidates_.clear();
        for (std::size_t j = 0; j < d; ++j) {
            if (lo_[j] < hi_[j]) candidates_.push_back(j);
        }
        if (candidates_.empty()) return make_leaf();

        const std::size_t dim = candidates_[std::uniform_int_distribution<std::size_t>(0, candidates_.size() - 1)(rng_)];
        const double lo = lo_[dim];
        const double hi = hi_[dim];
        double split = lo + unit_double(rng_()) * (hi - lo);
        if (split <= lo) split = std::nextafter(lo, hi);

        // x < split goes left; lo < split <= hi keeps both sides nonempty.
        const auto mid_it = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t r) { return data_(r, dim) < split; });
        const auto mid = static_cast<std::size_t>(mid_it - rows.begin());

        const std::int32_t left = grow(tree, rows, begin, mid, depth + 1);
        const std::int32_t right = grow(tree, rows, mid, end, depth + 1);
        auto& node = tree.nodes[static_cast<std::size_t>(id)];
        node.dim = static_cast<std::int32_t>(dim);
        node.split = split;
        node.left = left;
        node.right = right;
        node.size = static_cast<std::uint32_t>(count);
        return id;
    }

    const Matrix& data_;
    std::size_t height_limit_;
    std::mt19937_64& rng_;
    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<std::size_t> candidates_;
};

}  // namespace

IsolationForestModel IsolationForestModel::fit(const Matrix& data, const IsolationForestParams& params,
                                               Execution exec) {
    if (data.rows() == 0) throw std::invalid_argument("IsolationForestModel::fit: empty data");
    if (params.n_trees == 0) throw std::invalid_argument("IsolationForestModel::fit: n_trees must be positive");
    if (params.subsample == 0) throw std::invalid_argument("IsolationForestModel::fit: subsample must be positive");

    IsolationForestModel model;
    model.dim_ = data.cols();
    model.subsample_ = std::min(params.subsample, data.rows());
    model.height_limit_ = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(model.subsample_))));
    model.trees_.resize(params.n_trees);

    std::vector<std::size_t> all(data.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});

    const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
    for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
        std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows;
        rows.reserve(model.subsample_);
        std::sample(all.begin(), all.end(), std::back_inserter(rows), model.subsample_, rng);
        TreeBuilder builder(data, model.height_limit_, rng);
        model.trees_[static_cast<std::size_t>(t)] = builder.build(std::move(rows));
    }
    return model;
}

double IsolationForestModel::mean_path_length(std::span<const double> x) const {
    check_dim(x);
    double total = 0.0;
    for (const auto& tree : trees_) {
        std::size_t node = 0;
        std::size_t depth = 0;
        while (tree.nodes[node].dim != IsolationNode::kLeaf) {
            const auto& n = tree.nodes[node];
            node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.dim)] < n.split ? n.left : n.right);
            ++depth;
        }
        total += static_cast<double>(depth) + average_path_length(tree.nodes[node].size);
    }
    return total / static_cast<double>(trees_.size());
}

double IsolationForestModel::score(std::span<const double> x) const {
    const double h = mean_path_length(x);
    const double c = average_path_length(subsample_);
    if (c == 0.0) return 0.5;  // a one-sample forest carries no information
    return std::exp2(-h / c);
}

// ---------------------------------------------------------------------------

ExternalScores ExternalScores::load(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "id" || table.header[1] != "score") {
        throw FormatError(path.string() + ": expected header 'id,score'");
    }
    std::map<std::string, double> scores;
    for (const auto& row : table.rows) {
        const auto loc = path.string() + ":" + std::to_string(row.line);
        if (row.fields[0].empty()) throw FormatError(loc + ": empty id");
        const double s = parse_double(row.fields[1], loc);
        if (!std::isfinite(s)) throw FormatError(loc + ": non-finite score");
        if (!scores.emplace(row.fields[0], s).second) {
            throw FormatError(loc + ": duplicate id '" + row.fields[0] + "'");
        }
    }
    return ExternalScores(std::move(scores));
}

double ExternalScores::at(const std::string& id) const {
    const auto it = scores_.find(id);
    if (it == scores_.end()) throw std::out_of_range("external scores: no score for id '" + id + "'");
    return it->second;
}

std::vector<double> ExternalScores::lookup(std::span<const std::string> ids) const {
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(at(id));
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(DetectorKind kind) noexcept {
    switch (kind) {
        case DetectorKind::knn: return "knn";
        case DetectorKind::lof: return "lof";
        case DetectorKind::iforest: return "iforest";
    }
    return "?";
}

DetectorKind parse_detector_kind(std::string_view name) {
    if (name == "knn") return DetectorKind::knn;
    if (name == "lof") return DetectorKind::lof;
    if (name == "iforest") return DetectorKind::iforest;
    throw std::invalid_argument("unknown detector '" + std::string(name) + "' (expected knn, lof, iforest)");
}

std::string DetectorSpec::params() const {
    switch (kind) {
        case DetectorKind::knn: return "variant=" + std::string(to_string(variant)) + ";k=" + std::to_string(k);
        case DetectorKind::lof: return "k=" + std::to_string(k);
        case DetectorKind::iforest:
            return "n_trees=" + std::to_string(n_trees) + ";subsample=" + std::to_string(subsample);
    }
    return {};
}

DetectorSpec parse_detector_spec(std::string_view kind, std::string_view params) {
    DetectorSpec spec;
    spec.kind = parse_detector_kind(kind);
    for (const auto& item : split_fields(params, ';')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("malformed hyperparameter '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string value = item.substr(eq + 1);
        if (key == "variant") {
            spec.variant = parse_knn_variant(value);
        } else if (key == "k" || key == "n_trees" || key == "subsample") {
            const auto v = static_cast<std::size_t>(std::stoull(value));
            (key == "k" ? spec.k : key == "n_trees" ? spec.n_trees : spec.subsample) = v;
        } else {
            throw std::invalid_argument("unknown hyperparameter '" + key + "'");
        }
    }
    return spec;
}

std::unique_ptr<Detector> fit_detector(const DetectorSpec& spec, const Matrix& train, std::uint64_t seed,
                                       Execution exec) {
    switch (spec.kind) {
        case DetectorKind::knn:
            return std::make_unique<KnnModel>(train, spec.k, spec.variant);
        case DetectorKind::lof:
            return std::make_unique<LofModel>(train, spec.k, exec);
        case DetectorKind::iforest:
            return std::make_unique<IsolationForestModel>(
                IsolationForestModel::fit(train, {spec.n_trees, spec.subsample, seed}, exec));
    }
    throw std::logic_error("fit_detector: unhandled detector kind");
}

}  // namespace admeasures
