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

#include "admeasures/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace admeasures {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

}  // namespace

std::vector<std::string> split_fields(std::string_view line, char delimiter) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::string_view where) {
    field = trim(field);
    double value = 0.0;
    if (field == "NA" || field == "nan") return std::nan("");
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw FormatError(std::string(where) + ": cannot parse '" + std::string(field) + "' as a number");
    }
    return value;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split_fields(t);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw FormatError(where(path, lineno) + ": expected " + std::to_string(table.header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back({lineno, std::move(fields)});
    }
    if (!have_header) throw FormatError(path.string() + ": missing header row");
    return table;
}

LabeledScores read_labeled_scores(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    if (table.header.size() != 2 || table.header[0] != "label" || table.header[1] != "score") {
        throw FormatError(path.string() + ": expected header 'label,score'");
    }
    std::vector<int> labels;
    std::vector<double> scores;
    for (const auto& row : table.rows) {
        const auto loc = where(path, row.line);
        if (row.fields[0] != "0" && row.fields[0] != "1") {
            throw FormatError(loc + ": label must be 0 or 1, got '" + row.fields[0] + "'");
        }
        labels.push_back(row.fields[0] == "1" ? 1 : 0);
        scores.push_back(parse_double(row.fields[1], loc));
    }
    return LabeledScores(std::move(labels), std::move(scores));
}

void write_labeled_scores(const std::filesystem::path& path, std::span<const int> labels,
                          std::span<const double> scores) {
    std::ostringstream out;
    out << "label,score\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << labels[i] << ',' << format_exact(scores[i]) << '\n';
    write_file_atomic(path, out.str());
}

Matrix read_matrix(const std::filesystem::path& path) {
    const auto table = read_csv(path);
    Matrix m;
    std::vector<double> row;
    for (const auto& r : table.rows) {
        row.clear();
        const auto loc = where(path, r.line);
        for (const auto& f : r.fields) {
            const double v = parse_double(f, loc);
            if (!std::isfinite(v)) throw FormatError(loc + ": missing or non-finite value");
            row.push_back(v);
        }
        m.append_row(row);
    }
    if (m.rows() == 0) return Matrix(0, table.header.size());
    return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m, std::string_view comment) {
    std::ostringstream out;
    if (!comment.empty()) out << "# " << comment << '\n';
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_exact(r[j]);
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw FormatError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace admeasures
