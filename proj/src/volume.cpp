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

#include "admeasures/volume.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace admeasures {

namespace {

void validate_box(const SamplingBox& box) {
    if (box.lower.empty() || box.lower.size() != box.upper.size()) {
        throw std::invalid_argument("SamplingBox: bounds must be nonempty and of equal dimension");
    }
    bool any_width = false;
    for (std::size_t j = 0; j < box.dim(); ++j) {
        if (!(box.lower[j] <= box.upper[j])) {
            throw std::invalid_argument("SamplingBox: lower bound exceeds upper bound in dimension " +
                                        std::to_string(j));
        }
        any_width = any_width || box.lower[j] < box.upper[j];
    }
    if (!any_width) throw std::invalid_argument("SamplingBox: box is degenerate in every dimension");
}

std::size_t block_count(std::size_t n) { return (n + kVolumeBlockSize - 1) / kVolumeBlockSize; }

// Generates the samples of block b into `point` one at a time and hands each
// to `visit`. Zero-width dimensions reproduce the single coordinate value.
template <class Visit>
void for_each_block_sample(const SamplingBox& box, std::size_t n, std::uint64_t seed, std::size_t b,
                           std::vector<double>& point, Visit&& visit) {
    std::mt19937_64 rng(mix_seed(seed, b));
    const std::size_t begin = b * kVolumeBlockSize;
    const std::size_t end = std::min(n, begin + kVolumeBlockSize);
    const std::size_t d = box.dim();
    for (std::size_t i = begin; i < end; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double u = unit_double(rng());
            point[j] = box.lower[j] + u * (box.upper[j] - box.lower[j]);
        }
        visit(i, std::span<const double>(point));
    }
}

}  // namespace

SamplingBox bounding_box(const Matrix& points) {
    if (points.rows() == 0 || points.cols() == 0) {
        throw std::invalid_argument("bounding_box: empty point set");
    }
    SamplingBox box;
    const auto first = points.row(0);
    box.lower.assign(first.begin(), first.end());
    box.upper.assign(first.begin(), first.end());
    for (std::size_t i = 1; i < points.rows(); ++i) {
        const auto r = points.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            box.lower[j] = std::min(box.lower[j], r[j]);
            box.upper[j] = std::max(box.upper[j], r[j]);
        }
    }
    return box;
}

void draw_box_samples(const SamplingBox& box, std::size_t n, std::uint64_t seed, Matrix& out) {
    validate_box(box);
    out = Matrix(n, box.dim());
    std::vector<double> point(box.dim());
    for (std::size_t b = 0; b < block_count(n); ++b) {
        for_each_block_sample(box, n, seed, b, point, [&](std::size_t i, std::span<const double> x) {
            std::copy(x.begin(), x.end(), out.row(i).begin());
        });
    }
}

std::vector<std::size_t> count_below(const ScoreFunction& f, const SamplingBox& box,
                                     std::span<const double> thresholds, std::size_t n, std::uint64_t seed,
                                     Execution exec) {
    validate_box(box);
    if (n == 0) throw std::invalid_argument("count_below: sample count must be positive");

    const std::size_t blocks = block_count(n);
    const std::size_t levels = thresholds.size();
    std::vector<std::size_t> per_block(blocks * levels, 0);
    std::atomic<bool> non_finite{false};

    auto run_block = [&](std::size_t b, std::vector<double>& point) {
        std::size_t* counts = per_block.data() + b * levels;
        for_each_block_sample(box, n, seed, b, point, [&](std::size_t, std::span<const double> x) {
            const double s = f(x);
            if (!std::isfinite(s)) {
                non_finite.store(true, std::memory_order_relaxed);
                return;
            }
            for (std::size_t t = 0; t < levels; ++t) {
                counts[t] += static_cast<std::size_t>(s < thresholds[t]);
            }
        });
    };

    if (exec == Execution::serial) {
        std::vector<double> point(box.dim());
        for (std::size_t b = 0; b < blocks; ++b) run_block(b, point);
    } else {
#pragma omp parallel
        {
            std::vector<double> point(box.dim());
#pragma omp for schedule(dynamic, 1)
            for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
                run_block(static_cast<std::size_t>(b), point);
            }
        }
    }
    if (non_finite.load()) throw std::runtime_error("volume estimate: score function returned a non-finite value");

    std::vector<std::size_t> totals(levels, 0);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t t = 0; t < levels; ++t) totals[t] += per_block[b * levels + t];
    }
    return totals;
}

std::vector<VolumeEstimate> mc_volume_at_fprs(const ScoreFunction& f, const SamplingBox& box,
                                              const LabeledScores& data, std::span<const double> alphas,
                                              std::size_t n, std::uint64_t seed, Execution exec) {
    const RocCurve roc = build_roc(data);
    std::vector<double> thresholds;
    thresholds.reserve(alphas.size());
    for (const double alpha : alphas) thresholds.push_back(threshold_at_fpr(roc, alpha));

    const auto counts = count_below(f, box, thresholds, n, seed, exec);
    std::vector<VolumeEstimate> out;
    out.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        VolumeEstimate e;
        e.n_samples = n;
        e.normal_count = counts[i];
        e.threshold = thresholds[i];
        e.vol = static_cast<double>(counts[i]) / static_cast<double>(n);
        e.cvol = 1.0 - e.vol;
        out.push_back(e);
    }
    return out;
}

VolumeEstimate mc_volume_at_fpr(const ScoreFunction& f, const SamplingBox& box, const LabeledScores& data,
                                double alpha, std::size_t n, std::uint64_t seed, Execution exec) {
    const double alphas[] = {alpha};
    return mc_volume_at_fprs(f, box, data, alphas, n, seed, exec).front();
}

double cvol_at_fpr(const ScoreFunction& f, const SamplingBox& box, const LabeledScores& data, double alpha,
                   std::size_t n, std::uint64_t seed, Execution exec) {
    return mc_volume_at_fpr(f, box, data, alpha, n, seed, exec).cvol;
}

}  // namespace admeasures
