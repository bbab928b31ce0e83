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
#include <span>
#include <vector>

namespace admeasures {

/// Binary ground truth (1 = anomalous, 0 = normal) paired with anomaly
/// scores, higher meaning more anomalous. Construction validates that both
/// classes are present and every score is finite.
class LabeledScores {
public:
    LabeledScores(std::vector<int> labels, std::vector<double> scores);

    [[nodiscard]] std::span<const int> labels() const noexcept { return labels_; }
    [[nodiscard]] std::span<const double> scores() const noexcept { return scores_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] std::size_t positives() const noexcept { return positives_; }
    [[nodiscard]] std::size_t negatives() const noexcept { return labels_.size() - positives_; }

private:
    std::vector<int> labels_;
    std::vector<double> scores_;
    std::size_t positives_ = 0;
};

struct RocVertex {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;

    friend bool operator==(const RocVertex&, const RocVertex&) = default;
};

/// Empirical ROC staircase. The first vertex is (0, 0) at threshold +inf,
/// every further vertex corresponds to one distinct score (the threshold at
/// which that score block becomes positive), the last is (1, 1).
class RocCurve {
public:
    explicit RocCurve(std::vector<RocVertex> vertices);

    [[nodiscard]] std::span<const RocVertex> vertices() const noexcept { return vertices_; }
    [[nodiscard]] std::size_t size() const noexcept { return vertices_.size(); }

private:
    std::vector<RocVertex> vertices_;
};

/// Sweeps the threshold down through each distinct score. A sample is
/// classified positive when score >= threshold; tied scores enter as one
/// block and produce a diagonal segment.
RocCurve build_roc(const LabeledScores& data);

/// Trapezoidal area under the whole curve.
double auc(const RocCurve& curve);

/// Area over FPR in [0, alpha], splitting the bracketing segment at alpha.
/// With `normalized` the area is divided by alpha.
double auc_at(const RocCurve& curve, double alpha, bool normalized);

/// TPR of the polyline at FPR = alpha; on a vertical edge at alpha the upper
/// end is returned.
double tpr_at(const RocCurve& curve, double alpha);

/// Weighted AUC with weight 1/FPR, discretized by the right-endpoint
/// rectangle rule over FPR-increasing segments.
double auc_weighted(const RocCurve& curve);

/// Decision threshold achieving FPR = alpha, linearly interpolated between
/// the vertices bracketing alpha. Between the +inf origin and the first
/// finite vertex the smallest threshold flagging nothing is returned.
double threshold_at_fpr(const RocCurve& curve, double alpha);

}  // namespace admeasures
