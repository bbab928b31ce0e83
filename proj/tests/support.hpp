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

// Shared generators and brute-force oracles for the test binaries. Nothing
// here calls into the library's measure code.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "admeasures/curves.hpp"

namespace testsupport {

struct Instance {
    std::vector<int> labels;
    std::vector<double> scores;
};

/// Random labeled scores with both classes present. `levels` > 0 draws
/// integer scores from [0, levels) so ties are frequent.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_n, int levels) {
    std::uniform_int_distribution<std::size_t> size(2, max_n);
    const std::size_t n = size(rng);
    Instance in;
    in.labels.resize(n);
    in.scores.resize(n);
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
    std::uniform_int_distribution<int> level(0, std::max(levels, 1) - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        in.labels[i] = coin(rng) ? 1 : 0;
        in.scores[i] = levels > 0 ? static_cast<double>(level(rng)) : gauss(rng) + in.labels[i];
    }
    in.labels[0] = 1;
    in.labels[1] = 0;
    return in;
}

/// Probability that a random positive outranks a random negative, ties 1/2.
inline double pairwise_auc(const Instance& in) {
    double wins = 0.0;
    double pairs = 0.0;
    for (std::size_t i = 0; i < in.labels.size(); ++i) {
        if (in.labels[i] != 1) continue;
        for (std::size_t j = 0; j < in.labels.size(); ++j) {
            if (in.labels[j] != 0) continue;
            pairs += 1.0;
            if (in.scores[i] > in.scores[j]) wins += 1.0;
            if (in.scores[i] == in.scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

struct Rates {
    double fpr;
    double tpr;
};

/// (FPR, TPR) of the rule score >= tau, by direct counting.
inline Rates rates_at(const Instance& in, double tau) {
    double tp = 0, fp = 0, p = 0, n = 0;
    for (std::size_t i = 0; i < in.labels.size(); ++i) {
        const bool flagged = in.scores[i] >= tau;
        if (in.labels[i] == 1) {
            p += 1;
            tp += flagged;
        } else {
            n += 1;
            fp += flagged;
        }
    }
    return {fp / n, tp / p};
}

/// Right-endpoint sum of TPR/FPR over the threshold sweep, by counting.
inline double sweep_weighted_auc(const Instance& in) {
    std::vector<double> taus = in.scores;
    std::sort(taus.rbegin(), taus.rend());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    double prev_fpr = 0.0;
    double sum = 0.0;
    for (const double tau : taus) {
        const Rates r = rates_at(in, tau);
        if (r.fpr > prev_fpr) sum += r.tpr / r.fpr * (r.fpr - prev_fpr);
        prev_fpr = r.fpr;
    }
    return sum;
}

inline admeasures::LabeledScores to_labeled(const Instance& in) { return {in.labels, in.scores}; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("admeasures_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
