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

#include <scandet/flow_core.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace scandet {

/// Per-(IP, slice) flow counts, keyed by SliceKey.
using CountMap = std::unordered_map<SliceKey, std::uint64_t, SliceKeyHash>;

/// Number of flows each (src IP, slice) generated.
CountMap count_by_source(std::span<const FlowRecord> flows, const SliceConfig& cfg);
/// Number of flows each (dst IP, slice) received.
CountMap count_by_destination(std::span<const FlowRecord> flows, const SliceConfig& cfg);

/// Per-key addition of `from` into `into`. Associative and commutative, so
/// partial maps built on disjoint partitions can be merged in any order.
void merge_counts(CountMap& into, const CountMap& from);

struct SliceCounts {
    SliceKey key;
    std::uint64_t generated = 0;
    std::uint64_t received = 0;

    friend bool operator==(const SliceCounts&, const SliceCounts&) = default;
};

/// One row per key present in either map, the missing side filled with zero.
/// Rows are sorted by (slice_index, ip).
std::vector<SliceCounts> full_outer_join(const CountMap& generated, const CountMap& received);

/// Signed generated/received ratio. Positive when generation dominates
/// (generated / max(received, 1)); negative when reception dominates
/// (-(received / max(generated, 1))).
double ratio_of(const SliceCounts& counts);

enum class Direction { ScanSender, ScanReceiver };

std::string_view to_string(Direction direction);

struct DetectorConfig {
    double threshold = 100.0;
    SliceConfig slice;

    /// Throws ConfigError unless threshold is finite and > 0 and the slice
    /// configuration is valid.
    void validate() const;
};

struct RatioVerdict {
    SliceKey key;
    std::uint64_t generated = 0;
    std::uint64_t received = 0;
    double ratio = 0.0;
    Direction direction = Direction::ScanSender;

    friend bool operator==(const RatioVerdict&, const RatioVerdict&) = default;
};

/// ScanSender when ratio > threshold, ScanReceiver when ratio < -threshold,
/// nullopt otherwise.
std::optional<RatioVerdict> judge(const SliceCounts& counts, double threshold);

/// Applies the dual threshold to already joined rows, preserving their order.
std::vector<RatioVerdict> apply_threshold(std::span<const SliceCounts> rows, double threshold);

/// Count, join, ratio and threshold in one call. Output sorted by (slice_index, ip).
std::vector<RatioVerdict> detect(std::span<const FlowRecord> flows, const DetectorConfig& cfg);

/// Canonical (slice_index, ip) order.
void sort_verdicts(std::vector<RatioVerdict>& verdicts);

using DirectedIp = std::pair<IpAddress, Direction>;

/// IPs flagged in at least one slice, one element per (IP, direction).
std::set<DirectedIp> anomalous_ips(std::span<const RatioVerdict> verdicts);
/// IPs flagged in at least one slice, direction ignored.
std::set<IpAddress> flagged_ips(std::span<const RatioVerdict> verdicts);

}// namespace scandet
