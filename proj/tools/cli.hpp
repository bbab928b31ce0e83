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

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "admeasures/experiments.hpp"

namespace admeasures::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int { kSuccess = 0, kPartial = 1, kUsage = 2 };

/// Raised for bad flags, configuration files or missing inputs (exit code 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Resolved settings of a grid run.
struct RunSettings {
    std::filesystem::path config;
    std::filesystem::path benchmarks;
    std::filesystem::path out;
    GridConfig grid;
    std::size_t workers = 1;
    bool quiet = false;
};

/// `key = value` lines; `#` starts a comment. `detector` may repeat.
std::multimap<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Expands "knn variant=kappa,gamma k=1,3" into one spec per combination,
/// leftmost key outermost.
std::vector<DetectorSpec> expand_detector_line(const std::string& line);

/// Applies config entries to `settings`. Relative paths resolve against the
/// directory of the config file.
void apply_config(const std::multimap<std::string, std::string>& entries, const std::filesystem::path& config_dir,
                  RunSettings& settings);

/// Canonical manifest body; the worker count is deliberately absent so that
/// it cannot change output bytes.
std::string manifest_text(const RunSettings& settings);

/// 16 hex digits of the FNV-1a hash of `text`.
std::string manifest_hash(const std::string& text);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace admeasures::cli
