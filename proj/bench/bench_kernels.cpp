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

// Serial reference versus OpenMP timings of the scoring kernels.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#include "admeasures/detectors.hpp"
#include "admeasures/volume.hpp"

using namespace admeasures;

namespace {

Matrix gaussian(std::size_t n, std::size_t d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) m(i, j) = g(rng);
    }
    return m;
}

template <class F>
double best_ms(int repeats, F&& f) {
    double best = INFINITY;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

bool all_identical = true;

template <class R>
void row(const char* name, int repeats, const std::function<R(Execution)>& kernel) {
    R serial, parallel;
    const double ts = best_ms(repeats, [&] { serial = kernel(Execution::serial); });
    const double tp = best_ms(repeats, [&] { parallel = kernel(Execution::parallel); });
    const bool same = serial == parallel;
    all_identical = all_identical && same;
    std::printf("%-22s %12.2f %12.2f %9.2fx %10s\n", name, ts, tp, ts / tp, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial versus parallel kernel timings"};
    double scale = 1.0;
    int repeats = 3;
    app.add_option("--scale", scale, "Problem size multiplier")->check(CLI::PositiveNumber);
    app.add_option("--repeats", repeats, "Timing repetitions (best is reported)")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const auto n = [&](double base) { return std::max<std::size_t>(8, static_cast<std::size_t>(base * scale)); };
    const Matrix train = gaussian(n(2000), 8, 1);
    const Matrix queries = gaussian(n(4000), 8, 2);

    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("%-22s %12s %12s %10s %10s\n", "kernel", "serial ms", "parallel ms", "speedup", "identical");

    const KnnModel knn(train, 9, KnnVariant::gamma);
    row<std::vector<double>>("knn score_batch", repeats, [&](Execution e) { return knn.score_batch(queries, e); });

    row<std::vector<double>>("lof fit", repeats,
                             [&](Execution e) {
                                 const LofModel m(train, 20, e);
                                 return std::vector<double>(m.densities().begin(), m.densities().end());
                             });
    const LofModel lof(train, 20);
    row<std::vector<double>>("lof score_batch", repeats, [&](Execution e) { return lof.score_batch(queries, e); });

    const IsolationForestParams params{200, 256, 7};
    row<std::vector<double>>("iforest fit", repeats, [&](Execution e) {
        return IsolationForestModel::fit(train, params, e).score_batch(queries, Execution::serial);
    });
    const auto forest = IsolationForestModel::fit(train, params);
    row<std::vector<double>>("iforest score_batch", repeats,
                             [&](Execution e) { return forest.score_batch(queries, e); });

    const auto box = bounding_box(train);
    const std::vector<double> taus{0.8, 1.0, 1.2};
    const ScoreFunction score = [&](std::span<const double> x) { return knn.score(x); };
    row<std::vector<std::size_t>>("volume count_below", repeats,
                                  [&](Execution e) { return count_below(score, box, taus, n(20000), 3, e); });

    return all_identical ? 0 : 1;
}
