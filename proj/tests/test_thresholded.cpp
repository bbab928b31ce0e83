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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "admeasures/thresholded.hpp"
#include "support.hpp"

using namespace admeasures;

namespace {

const LabeledScores kExample({0, 0, 1, 1}, {0.1, 0.4, 0.35, 0.8});

// n_neg normals scored 0..n_neg-1 and n_pos anomalies scored above them.
LabeledScores separated(std::size_t n_neg, std::size_t n_pos, bool inverted = false) {
    std::vector<int> labels;
    std::vector<double> scores;
    for (std::size_t i = 0; i < n_neg; ++i) {
        labels.push_back(0);
        scores.push_back(static_cast<double>(i));
    }
    for (std::size_t i = 0; i < n_pos; ++i) {
        labels.push_back(1);
        scores.push_back(inverted ? -1.0 - static_cast<double>(i) : static_cast<double>(n_neg + i));
    }
    return {labels, scores};
}

}  // namespace

TEST_CASE("confusion counts of the worked example") {
    const auto c = confusion_at(kExample, 0.35);
    CHECK(c.tp == 2);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
    CHECK(c.fn == 0);
    const auto above = confusion_at(kExample, 0.9);
    CHECK((above.tp == 0 && above.fp == 0));
    const auto below = confusion_at(kExample, 0.0);
    CHECK((below.fn == 0 && below.tn == 0));
}

TEST_CASE("confusion counts are conserved across thresholds") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = testsupport::random_instance(rng, 50, trial % 2 ? 4 : 0);
        const auto data = testsupport::to_labeled(in);
        for (const double tau : in.scores) {
            const auto c = confusion_at(data, tau);
            CHECK(c.tp + c.fn == data.positives());
            CHECK(c.fp + c.tn == data.negatives());
        }
    }
}

TEST_CASE("f1 at fixed fpr") {
    CHECK(f1_at_fpr(kExample, 0.5) == doctest::Approx(0.8).epsilon(1e-15));
    // Two score levels: every alpha below 1 puts the threshold between them.
    const LabeledScores two_level({0, 0, 0, 1, 1}, {1, 1, 1, 2, 2});
    for (const double a : {0.01, 0.3, 0.99}) CHECK(f1_at_fpr(two_level, a) == 1.0);
    // All tied, alpha 1: tp = P, fp = N.
    const LabeledScores tied({0, 0, 0, 1, 1}, {1, 1, 1, 1, 1});
    CHECK(f1_at_fpr(tied, 1.0) == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(f1_score({0, 0, 5, 0}) == 0.0);
    CHECK_THROWS_AS(f1_at_fpr(kExample, 0.0), std::invalid_argument);
}

TEST_CASE("f1 is invariant under increasing score transforms") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        auto in = testsupport::random_instance(rng, 80, 0);
        const double before = f1_at_fpr(testsupport::to_labeled(in), 0.1);
        for (auto& s : in.scores) s = std::atan(s) * 7.0 - 1.0;
        CHECK(f1_at_fpr(testsupport::to_labeled(in), 0.1) == before);
    }
}

TEST_CASE("precision at p of perfect and inverted detectors") {
    for (const std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        for (const double p : {0.01, 0.05, 0.2}) {
            const auto perfect = precision_at_p(separated(190, 21), {p, 1, seed});
            CHECK(perfect.value == 1.0);
            CHECK(precision_at_p(separated(190, 21, true), {p, 10, seed}).value == 0.0);
        }
    }
    for (int n_neg = 20; n_neg < 400; n_neg += 7) {
        for (const double p : {0.01, 0.05, 0.1, 0.25}) {
            CHECK(precision_at_p(separated(static_cast<std::size_t>(n_neg), 60), {p, 3, 5}).value == 1.0);
        }
    }
}

TEST_CASE("precision at p subsamples normals when anomalies are scarce") {
    // 2 anomalies among 1000 normals: p = 0.05 cannot be reached by dropping
    // anomalies, so normals are cut to floor(2 * 0.95 / 0.05) = 38.
    const auto r = precision_at_p(separated(1000, 2), {0.05, 10, 3});
    CHECK(r.normals_subsampled);
    CHECK(r.value == 1.0);
    CHECK_FALSE(precision_at_p(separated(100, 50), {0.05, 10, 3}).normals_subsampled);
}

TEST_CASE("precision at p of random scores approaches p") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < 24000; ++i) {
        labels.push_back(i < 4000 ? 1 : 0);
        scores.push_back(u(rng));
    }
    const LabeledScores data(labels, scores);
    CHECK(std::abs(precision_at_p(data, {0.05, 1000, 7}).value - 0.05) <= 0.01);
}

TEST_CASE("precision at p is seeded and validates its configuration") {
    std::mt19937_64 rng(24);
    const auto in = testsupport::random_instance(rng, 150, 0);
    const auto data = testsupport::to_labeled(in);
    CHECK(precision_at_p(data, {0.1, 10, 42}).value == precision_at_p(data, {0.1, 10, 42}).value);
    CHECK_THROWS_AS(precision_at_p(data, {0.0, 10, 0}), std::invalid_argument);
    CHECK_THROWS_AS(precision_at_p(data, {1.0, 10, 0}), std::invalid_argument);
    CHECK_THROWS_AS(precision_at_p(data, {0.1, 0, 0}), std::invalid_argument);
}

TEST_CASE("precision at p cut uses the top ceil(p |X|) samples") {
    // 19 normals and one anomaly: p = 0.05 keeps the anomaly, |X| = 20, top
    // set of one. The anomaly ties the best normal and wins only on index
    // order when it comes first.
    std::vector<int> labels(20, 0);
    std::vector<double> scores(20, 0.0);
    for (int i = 0; i < 19; ++i) scores[static_cast<std::size_t>(i)] = i;
    labels[19] = 1;
    scores[19] = 18.0;
    CHECK(precision_at_p(LabeledScores(labels, scores), {0.05, 4, 0}).value == 0.0);
    std::rotate(labels.rbegin(), labels.rbegin() + 1, labels.rend());
    std::rotate(scores.rbegin(), scores.rbegin() + 1, scores.rend());
    CHECK(labels[0] == 1);
    CHECK(precision_at_p(LabeledScores(labels, scores), {0.05, 4, 0}).value == 1.0);
}
