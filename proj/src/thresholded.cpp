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

#include "admeasures/thresholded.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "admeasures/common.hpp"

namespace admeasures {

namespace {

// Guards ceil/floor against products such as 0.05 * 1000 landing one ulp
// above an integer.
constexpr double kRoundingSlack = 1e-9;

std::size_t ceil_count(double x) { return static_cast<std::size_t>(std::ceil(x - kRoundingSlack)); }
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + kRoundingSlack)); }

}  // namespace

ConfusionCounts confusion_at(const LabeledScores& data, double threshold) {
    ConfusionCounts c;
    const auto labels = data.labels();
    const auto scores = data.scores();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const bool flagged = scores[i] >= threshold;
        if (labels[i] == 1) {
            flagged ? ++c.tp : ++c.fn;
        } else {
            flagged ? ++c.fp : ++c.tn;
        }
    }
    return c;
}

double f1_score(const ConfusionCounts& c) noexcept {
    const auto denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(c.tp) / denom;
}

double f1_at_fpr(const LabeledScores& data, double alpha) {
    const double tau = threshold_at_fpr(build_roc(data), alpha);
    return f1_score(confusion_at(data, tau));
}

PrecisionAtPResult precision_at_p(const LabeledScores& data, const PrecisionAtPConfig& cfg) {
    if (!(cfg.p > 0.0 && cfg.p < 1.0)) {
        throw std::invalid_argument("precision_at_p: p must lie in (0, 1), got " + std::to_string(cfg.p));
    }
    if (cfg.rounds < 1) throw std::invalid_argument("precision_at_p: rounds must be positive");

    const auto labels = data.labels();
    const auto scores = data.scores();
    std::vector<std::size_t> anomalies;
    std::vector<std::size_t> normals;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (labels[i] == 1 ? anomalies : normals).push_back(i);
    }
    const double n_pos = static_cast<double>(anomalies.size());
    const double n_neg = static_cast<double>(normals.size());

    PrecisionAtPResult result;
    std::size_t keep_pos = ceil_count(cfg.p * n_neg / (1.0 - cfg.p));
    std::size_t keep_neg = normals.size();
    if (keep_pos > anomalies.size()) {
        keep_pos = anomalies.size();
        keep_neg = floor_count(n_pos * (1.0 - cfg.p) / cfg.p);
        result.normals_subsampled = true;
    }

    std::vector<std::size_t> subset;
    subset.reserve(keep_pos + keep_neg);
    double total = 0.0;
    for (int round = 0; round < cfg.rounds; ++round) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(round)));
        subset.clear();
        std::sample(anomalies.begin(), anomalies.end(), std::back_inserter(subset), keep_pos, rng);
        std::sample(normals.begin(), normals.end(), std::back_inserter(subset), keep_neg, rng);

        const std::size_t top = ceil_count(cfg.p * static_cast<double>(subset.size()));
        if (top == 0) throw std::invalid_argument("precision_at_p: p yields an empty top set");
        std::partial_sort(subset.begin(), subset.begin() + static_cast<std::ptrdiff_t>(top), subset.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (scores[a] != scores[b]) return scores[a] > scores[b];
                              return a < b;
                          });
        std::size_t hits = 0;
        for (std::size_t i = 0; i < top; ++i) hits += static_cast<std::size_t>(labels[subset[i]]);
        total += static_cast<double>(hits) / static_cast<double>(top);
    }
    result.value = total / cfg.rounds;
    return result;
}

}  // namespace admeasures
