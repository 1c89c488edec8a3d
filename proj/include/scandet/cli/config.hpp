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

#include <scandet/classifier.hpp>
#include <scandet/detector.hpp>
#include <scandet/engine.hpp>
#include <scandet/eval.hpp>
#include <scandet/ingest.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace scandet::cli {

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnv = "SCANDET_CONFIG";

/// Every tunable of a run, loaded from one INI file:
///
///   [slice]     seconds, trace_start_us
///   [detector]  threshold
///   [rules]     netscan_min_flows, portscan_min_ports, combined_min_flows_per_slice,
///               subnet_prefix_v4, subnet_prefix_v6, known_ports
///   [engine]    workers, partitioning (slice|ip), mode (batch|stream), watermark_lag_seconds
///   [eval]      whitelist, whitelist_file, directional
///   [ingest]    strict, max_error_ratio
///
/// Rule minima accept "off" to disable the rule. Unknown keys are rejected.
struct AppConfig {
    DetectorConfig detector;
    /// Slices align to this when set, otherwise to the earliest flow.
    std::optional<Timestamp> trace_start;
    RuleConfig rules;
    EngineConfig engine;
    LabelWhitelist whitelist = LabelWhitelist::defaults();
    bool directional = false;
    FlowFileOptions flow_file;
    GroundTruthOptions ground_truth;

    void validate() const;
    nlohmann::json to_json() const;
};

/// Throws ConfigError naming the offending key, IoError if unreadable.
AppConfig load_config(const std::filesystem::path& path);
/// Applies the file's keys over `base`.
void apply_config_file(AppConfig& base, const std::filesystem::path& path);

/// Parses "50,100,200" style lists.
std::vector<double> parse_threshold_list(std::string_view text, std::string_view field);

}// namespace scandet::cli
