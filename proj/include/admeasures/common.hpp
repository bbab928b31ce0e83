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
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace admeasures {

/// Selects the serial reference path or the OpenMP path of a kernel.
/// Both paths produce bit-identical results.
enum class Execution { serial, parallel };

/// Dense row-major matrix; one row per sample.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

    [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    /// Appends a row; the first row fixes the column count.
    void append_row(std::span<const double> values);

    /// Rows selected by index, in the given order.
    [[nodiscard]] Matrix select_rows(std::span<const std::size_t> indices) const;

    /// Vertical concatenation; column counts must agree.
    [[nodiscard]] static Matrix stack(const Matrix& top, const Matrix& bottom);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b) noexcept;

// Seed plumbing. Every random stream in the library is derived from an
// explicit seed through these functions so that results do not depend on
// scheduling or worker count.
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

/// seed = hash(master seed, dataset name, repetition index)
std::uint64_t derive_seed(std::uint64_t master, std::string_view name, std::uint64_t repetition) noexcept;

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Mean and standard deviation of a sample. `ddof` = 1 gives the sample
/// (n - 1) estimate, 0 the population one.
struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};
MeanStd mean_std(std::span<const double> values, int ddof);

/// Formats a double with round-trip precision ("%.17g").
std::string format_exact(double value);

/// Formats a double with fixed decimals.
std::string format_fixed(double value, int decimals);

}  // namespace admeasures
