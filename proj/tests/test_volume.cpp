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
#include <limits>

#include "admeasures/volume.hpp"

using namespace admeasures;

namespace {

double max_norm(std::span<const double> x) {
    double m = 0.0;
    for (const double v : x) m = std::max(m, std::abs(v));
    return m;
}

const SamplingBox kSquare{{-1.0, -1.0}, {1.0, 1.0}};

// ROC whose threshold at FPR 0.5 is exactly 0.5.
const LabeledScores kHalf({0, 0, 1}, {0.5, 0.2, 0.9});

Matrix points(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(0, rows.begin()->size());
    for (const auto& r : rows) m.append_row(std::vector<double>(r));
    return m;
}

}  // namespace

TEST_CASE("bounding box is the componentwise extent") {
    const auto b = bounding_box(points({{0, 0}, {1, 2}, {-1, 1}}));
    CHECK(b.lower == std::vector<double>{-1, 0});
    CHECK(b.upper == std::vector<double>{1, 2});
    const auto single = bounding_box(points({{3, 4}}));
    CHECK(single.lower == single.upper);
    const auto line = bounding_box(points({{0, 1}, {2, 1}}));
    CHECK(line.lower[1] == line.upper[1]);
    CHECK_THROWS(bounding_box(Matrix(0, 2)));
}

TEST_CASE("box samples stay inside the box and keep constant coordinates") {
    Matrix out;
    draw_box_samples({{-2.0, 5.0}, {3.0, 5.0}}, 5000, 17, out);
    REQUIRE(out.rows() == 5000);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        CHECK((out(i, 0) >= -2.0 && out(i, 0) <= 3.0));
        CHECK(out(i, 1) == 5.0);
    }
}

TEST_CASE("max-norm detector recovers the analytic volume") {
    const auto est = mc_volume_at_fpr(max_norm, kSquare, kHalf, 0.5, 100000, 1);
    CHECK(est.threshold == 0.5);
    CHECK(std::abs(est.vol - 0.25) <= 0.005);
    CHECK(std::abs(cvol_at_fpr(max_norm, kSquare, kHalf, 0.5, 100000, 1) - 0.75) <= 0.005);
    CHECK(est.vol + est.cvol == 1.0);
    CHECK(est.n_samples == 100000);
    CHECK(est.vol == static_cast<double>(est.normal_count) / 100000.0);
}

TEST_CASE("threshold outside the score range gives volume 0 or 1") {
    const std::vector<double> taus{-1.0, 0.0, 5.0};
    const auto counts = count_below(max_norm, kSquare, taus, 2000, 3);
    CHECK(counts[0] == 0);
    CHECK(counts[1] == 0);
    CHECK(counts[2] == 2000);
    // Strict inequality: a constant detector at its own value counts as anomalous.
    const std::vector<double> at{1.0};
    CHECK(count_below([](std::span<const double>) { return 1.0; }, kSquare, at, 500, 3)[0] == 0);
}

TEST_CASE("volume estimates are bit-reproducible and thread-count independent") {
    const std::vector<double> taus{0.1, 0.5, 0.9};
    for (const std::size_t n : {1ULL, 4095ULL, 4096ULL, 4097ULL, 30000ULL}) {
        const auto serial = count_below(max_norm, kSquare, taus, n, 77, Execution::serial);
        const auto parallel = count_below(max_norm, kSquare, taus, n, 77, Execution::parallel);
        CHECK(serial == parallel);
        CHECK(count_below(max_norm, kSquare, taus, n, 77) == parallel);
    }
    CHECK(count_below(max_norm, kSquare, taus, 30000, 77) != count_below(max_norm, kSquare, taus, 30000, 78));
}

TEST_CASE("volume is nonincreasing in alpha") {
    std::vector<int> labels;
    std::vector<double> scores;
    for (int i = 0; i < 200; ++i) {
        labels.push_back(i % 5 == 0 ? 1 : 0);
        scores.push_back(std::fmod(i * 0.6180339887, 1.0) * 1.4);
    }
    const LabeledScores data(labels, scores);
    const std::vector<double> alphas{0.01, 0.05, 0.1, 0.3, 0.6, 1.0};
    const auto est = mc_volume_at_fprs(max_norm, kSquare, data, alphas, 20000, 5);
    for (std::size_t i = 1; i < est.size(); ++i) CHECK(est[i - 1].vol >= est[i].vol);
    for (const auto& e : est) CHECK(e.vol + e.cvol == 1.0);
}

TEST_CASE("spread across seeds stays inside the binomial envelope") {
    const std::size_t n = 2000;
    const double v = 0.25;
    const double sigma = std::sqrt(v * (1.0 - v) / static_cast<double>(n));
    const std::vector<double> tau{0.5};
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const double vol = static_cast<double>(count_below(max_norm, kSquare, tau, n, seed)[0]) / n;
        CHECK(std::abs(vol - v) <= 4.0 * sigma);
    }
}

TEST_CASE("error shrinks at the Monte-Carlo rate") {
    const std::vector<double> tau{0.5};
    const auto mean_error = [&](std::size_t n) {
        double sum = 0.0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            sum += std::abs(static_cast<double>(count_below(max_norm, kSquare, tau, n, 1000 + seed)[0]) / n - 0.25);
        }
        return sum / 40.0;
    };
    // 16x the samples: error should drop by about 4x.
    const double ratio = mean_error(1000) / mean_error(16000);
    CHECK(ratio > 2.5);
    CHECK(ratio < 6.5);
}

TEST_CASE("volume rejects invalid input") {
    const std::vector<double> tau{0.5};
    CHECK_THROWS_AS(count_below(max_norm, {{1.0, 1.0}, {1.0, 1.0}}, tau, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(count_below(max_norm, kSquare, tau, 0, 0), std::invalid_argument);
    CHECK_THROWS(count_below([](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); },
                             kSquare, tau, 10, 0));
    CHECK_THROWS_AS(mc_volume_at_fpr(max_norm, kSquare, kHalf, 0.0, 10, 0), std::invalid_argument);
    CHECK_THROWS_AS(mc_volume_at_fpr(max_norm, kSquare, kHalf, 1.5, 10, 0), std::invalid_argument);
}
