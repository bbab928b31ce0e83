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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "admeasures/common.hpp"
#include "admeasures/curves.hpp"

namespace admeasures {

/// Raised for unreadable or malformed input files. The message names the
/// file and, where it applies, the 1-based line number.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CsvRow {
    std::size_t line = 0;  // 1-based line number in the file
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

/// Comma-delimited text with a header row. Blank lines and lines starting
/// with '#' are skipped. Fields are not quoted.
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_fields(std::string_view line, char delimiter = ',');

/// Parses a whole field as a double; throws FormatError mentioning `where`.
double parse_double(std::string_view field, std::string_view where);

/// `label,score` file.
LabeledScores read_labeled_scores(const std::filesystem::path& path);
void write_labeled_scores(const std::filesystem::path& path, std::span<const int> labels,
                          std::span<const double> scores);

/// Numeric matrix file: header row of column names, one sample per row.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m, std::string_view comment = {});

/// Writes `content` to `path` via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

}  // namespace admeasures
