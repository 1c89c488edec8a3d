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

#include <scandet/ingest.hpp>

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace scandet::cli {

/// Hosts that talk to each other in request/reply pairs, so every host
/// generates and receives about the same number of flows.
struct BackgroundSpec {
    std::uint32_t hosts = 50;
    IpAddress network = IpAddress::v4(0x0A000000);// 10.0.0.0
    std::uint32_t sessions_per_slice = 4;
    std::vector<std::uint16_t> ports = {25, 53, 80, 443};
};

enum class ScannerKind { NetScan, PortScan };

struct ScannerSpec {
    ScannerKind kind = ScannerKind::NetScan;
    std::uint32_t count = 1;
    std::uint32_t flows_per_slice = 120;
    /// Slices to scan in; empty means every slice.
    std::vector<std::uint64_t> slices;
    /// Scanner i targets the /24 at target_network + 256*i.
    IpAddress target_network = IpAddress::v4(0xAC100000);// 172.16.0.0
    /// NetScan destination ports (picked per flow). Unused by PortScan.
    std::vector<std::uint16_t> ports = {22};
    std::string label;
    Category category = Category::Anomalous;
    bool in_ground_truth = true;
};

/// Ground-truth-only entry naming a background host; lets fixtures carry
/// non-scan anomalies (DoS, ICMP, ...) that the detector should ignore.
struct DecoySpec {
    std::string label = "DoS";
    Category category = Category::Anomalous;
    std::uint32_t count = 1;
};

struct SynthSpec {
    Timestamp trace_start = from_epoch_us(1514808000000000);// 2018-01-01T12:00:00Z
    std::uint64_t slices = 30;
    Micros slice_duration = std::chrono::seconds{30};
    BackgroundSpec background;
    std::vector<ScannerSpec> scanners;
    std::vector<DecoySpec> decoys;

    /// Throws ConfigError on a malformed document.
    static SynthSpec from_json(const nlohmann::json& j);
};

struct SynthTrace {
    /// Sorted by first_seen.
    std::vector<FlowRecord> flows;
    std::vector<GroundTruthEntry> anomalous;
    std::vector<GroundTruthEntry> notice;
    /// Every planted scanner source, in or out of ground truth.
    std::vector<IpAddress> scanners;
    std::vector<IpAddress> background_hosts;
};

/// Deterministic for a given (spec, seed).
SynthTrace synthesize(const SynthSpec& spec, std::uint64_t seed);

}// namespace scandet::cli
