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
#include <functional>
#include <span>
#include <vector>

#include "admeasures/common.hpp"
#include "admeasures/curves.hpp"

namespace admeasures {

/// Detector decision function f: R^d -> R. Must be safe to call
/// concurrently when used with Execution::parallel.
using ScoreFunction = std::function<double(std::span<const double>)>;

struct SamplingBox {
    std::vector<double> lower;
    std::vector<double> upper;

    [[nodiscard]] std::size_t dim() const noexcept { return lower.size(); }
};

/// Componentwise min/max of the rows, no margin.
SamplingBox bounding_box(const Matrix& points);

struct VolumeEstimate {
    double vol = 0.0;
    double cvol = 1.0;
    std::size_t n_samples = 0;
    std::size_t normal_count = 0;
    double threshold = 0.0;
};

/// Samples are drawn in fixed-size blocks; block b uses a generator seeded
/// from (seed, b). Counts are therefore independent of the worker count.
inline constexpr std::size_t kVolumeBlockSize = 4096;

/// Fills `out` (n x d) with the uniform box samples used by every volume
/// estimate with the same (box, n, seed).
void draw_box_samples(const SamplingBox& box, std::size_t n, std::uint64_t seed, Matrix& out);

/// For each threshold, the number of the n box samples with f(x) < threshold.
/// One pass over the samples serves all thresholds. Throws on a non-finite
/// score.
std::vector<std::size_t> count_below(const ScoreFunction& f, const SamplingBox& box,
                                     std::span<const double> thresholds, std::size_t n, std::uint64_t seed,
                                     Execution exec = Execution::parallel);

/// VOL@alpha: fraction of uniform box samples classified normal (f(x) < tau)
/// at the threshold tau whose FPR on `data` is alpha. CVOL = 1 - VOL.
VolumeEstimate mc_volume_at_fpr(const ScoreFunction& f, const SamplingBox& box, const LabeledScores& data,
                                double alpha, std::size_t n, std::uint64_t seed,
                                Execution exec = Execution::parallel);

/// Same estimate for several alpha levels sharing one sample set.
std::vector<VolumeEstimate> mc_volume_at_fprs(const ScoreFunction& f, const SamplingBox& box,
                                              const LabeledScores& data, std::span<const double> alphas,
                                              std::size_t n, std::uint64_t seed,
                                              Execution exec = Execution::parallel);

double cvol_at_fpr(const ScoreFunction& f, const SamplingBox& box, const LabeledScores& data, double alpha,
                   std::size_t n, std::uint64_t seed, Execution exec = Execution::parallel);

}  // namespace admeasures
