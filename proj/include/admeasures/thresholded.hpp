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

#include "admeasures/curves.hpp"

namespace admeasures {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Counts under the rule score >= threshold => positive.
ConfusionCounts confusion_at(const LabeledScores& data, double threshold);

/// 2tp / (2tp + fp + fn), 0 when the denominator vanishes.
double f1_score(const ConfusionCounts& counts) noexcept;

/// F1 at the threshold whose FPR is alpha on the ROC of `data`.
double f1_at_fpr(const LabeledScores& data, double alpha);

struct PrecisionAtPConfig {
    double p = 0.05;
    int rounds = 10;
    std::uint64_t seed = 0;
};

struct PrecisionAtPResult {
    double value = 0.0;
    /// Set when the data held fewer anomalies than proportion p requires and
    /// the normal class was subsampled instead.
    bool normals_subsampled = false;
};

/// Mean over `rounds` of the precision among the ceil(p * |X|) top-scored
/// samples of a random subsample X whose anomaly proportion is p.
///
/// Anomalies are subsampled to ceil(p * N / (1 - p)) when enough exist,
/// otherwise all anomalies are kept and normals are cut to
/// floor(P * (1 - p) / p). Both roundings keep the realized proportion at or
/// above p, which makes the top set of a perfect detector exactly the
/// retained anomalies. Ties at the cut go to the lower input index.
PrecisionAtPResult precision_at_p(const LabeledScores& data, const PrecisionAtPConfig& cfg);

}  // namespace admeasures
