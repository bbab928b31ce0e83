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

#include "admeasures/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace admeasures {

namespace {

void require_alpha(double alpha, const char* what) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument(std::string(what) + ": alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
}

// Index of the last vertex with fpr <= alpha. Vertex 0 has fpr 0, so the
// result is well defined for alpha >= 0.
std::size_t last_vertex_at_or_before(std::span<const RocVertex> v, double alpha) {
    const auto it = std::upper_bound(v.begin(), v.end(), alpha,
                                     [](double a, const RocVertex& vx) { return a < vx.fpr; });
    return static_cast<std::size_t>(std::distance(v.begin(), it)) - 1;
}

}  // namespace

LabeledScores::LabeledScores(std::vector<int> labels, std::vector<double> scores)
    : labels_(std::move(labels)), scores_(std::move(scores)) {
    if (labels_.size() != scores_.size()) {
        throw std::invalid_argument("LabeledScores: " + std::to_string(labels_.size()) + " labels but " +
                                    std::to_string(scores_.size()) + " scores");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] != 0 && labels_[i] != 1) {
            throw std::invalid_argument("LabeledScores: label at index " + std::to_string(i) + " is not 0 or 1");
        }
        if (!std::isfinite(scores_[i])) {
            throw std::invalid_argument("LabeledScores: non-finite score at index " + std::to_string(i));
        }
        positives_ += static_cast<std::size_t>(labels_[i]);
    }
    if (positives_ == 0) throw std::invalid_argument("LabeledScores: no positive (anomalous) samples");
    if (positives_ == labels_.size()) throw std::invalid_argument("LabeledScores: no negative (normal) samples");
}

RocCurve::RocCurve(std::vector<RocVertex> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 2) throw std::invalid_argument("RocCurve: needs at least two vertices");
    const auto& first = vertices_.front();
    const auto& last = vertices_.back();
    if (first.fpr != 0.0 || first.tpr != 0.0 || last.fpr != 1.0 || last.tpr != 1.0) {
        throw std::invalid_argument("RocCurve: must start at (0,0) and end at (1,1)");
    }
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
        const auto& a = vertices_[i - 1];
        const auto& b = vertices_[i];
        if (b.fpr < a.fpr || b.tpr < a.tpr || b.threshold > a.threshold) {
            throw std::invalid_argument("RocCurve: vertices not monotone at index " + std::to_string(i));
        }
        if (b.fpr == a.fpr && b.tpr == a.tpr) {
            throw std::invalid_argument("RocCurve: repeated vertex at index " + std::to_string(i));
        }
    }
}

RocCurve build_roc(const LabeledScores& data) {
    const auto scores = data.scores();
    const auto labels = data.labels();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    const auto pos = static_cast<double>(data.positives());
    const auto neg = static_cast<double>(data.negatives());

    std::vector<RocVertex> vertices;
    vertices.reserve(order.size() + 1);
    vertices.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});

    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double block_score = scores[order[i]];
        while (i < order.size() && scores[order[i]] == block_score) {
            if (labels[order[i]] == 1) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        vertices.push_back({static_cast<double>(fp) / neg, static_cast<double>(tp) / pos, block_score});
    }
    return RocCurve(std::move(vertices));
}

double auc(const RocCurve& curve) { return auc_at(curve, 1.0, false); }

double auc_at(const RocCurve& curve, double alpha, bool normalized) {
    require_alpha(alpha, "auc_at");
    const auto v = curve.vertices();
    double area = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const auto& a = v[i - 1];
        const auto& b = v[i];
        if (b.fpr <= alpha) {
            area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
            continue;
        }
        if (a.fpr < alpha) {
            const double t = (alpha - a.fpr) / (b.fpr - a.fpr);
            const double tpr_alpha = a.tpr + t * (b.tpr - a.tpr);
            area += (alpha - a.fpr) * (a.tpr + tpr_alpha) * 0.5;
        }
        break;
    }
    return normalized ? area / alpha : area;
}

double tpr_at(const RocCurve& curve, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("tpr_at: alpha must lie in [0, 1], got " + std::to_string(alpha));
    }
    const auto v = curve.vertices();
    const std::size_t i = last_vertex_at_or_before(v, alpha);
    if (v[i].fpr == alpha || i + 1 == v.size()) return v[i].tpr;
    const auto& a = v[i];
    const auto& b = v[i + 1];
    const double t = (alpha - a.fpr) / (b.fpr - a.fpr);
    return a.tpr + t * (b.tpr - a.tpr);
}

double auc_weighted(const RocCurve& curve) {
    const auto v = curve.vertices();
    double sum = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double dfpr = v[i].fpr - v[i - 1].fpr;
        if (dfpr > 0.0) {
            // v[i].fpr > 0 here, so the FPR = 0 convention never applies.
            sum += v[i].tpr / v[i].fpr * dfpr;
        }
    }
    return sum;
}

double threshold_at_fpr(const RocCurve& curve, double alpha) {
    require_alpha(alpha, "threshold_at_fpr");
    const auto v = curve.vertices();
    const std::size_t i = last_vertex_at_or_before(v, alpha);
    if (v[i].fpr == alpha || i + 1 == v.size()) return v[i].threshold;
    const auto& a = v[i];
    const auto& b = v[i + 1];
    if (std::isinf(a.threshold)) {
        return std::nextafter(b.threshold, std::numeric_limits<double>::infinity());
    }
    const double t = (alpha - a.fpr) / (b.fpr - a.fpr);
    return a.threshold + t * (b.threshold - a.threshold);
}

}  // namespace admeasures
