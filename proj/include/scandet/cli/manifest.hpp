/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace scandet::cli {

std::string tool_version();

/// Hex SHA-256 of a file's bytes. Throws IoError if unreadable.
std::string sha256_file(const std::filesystem::path& path);

/// Reproducibility record written next to every output.
struct RunManifest {
    std::string command;
    nlohmann::json config;
    /// (path, sha256) of each input.
    std::vector<std::pair<std::string, std::string>> inputs;
    std::vector<std::string> outputs;
    std::string started_at;
    std::string finished_at;

    void add_input(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// ISO-8601 UTC wall-clock time.
std::string utc_now();

/// `<output>.manifest.json`
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

/// The reference line that opens every delimited-text output.
std::string manifest_reference(const std::filesystem::path& output);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

}// namespace scandet::cli
