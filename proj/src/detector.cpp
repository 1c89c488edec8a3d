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

#include <scandet/detector.hpp>
#include <scandet/errors.hpp>

#include <algorithm>
#include <cmath>

namespace scandet {

CountMap count_by_source(std::span<const FlowRecord> flows, const SliceConfig& cfg) {
    CountMap counts;
    for (const auto& flow : flows) {
        ++counts[SliceKey{flow.src, slice_of(flow, cfg)}];
    }
    return counts;
}

CountMap count_by_destination(std::span<const FlowRecord> flows, const SliceConfig& cfg) {
    CountMap counts;
    for (const auto& flow : flows) {
        ++counts[SliceKey{flow.dst, slice_of(flow, cfg)}];
    }
    return counts;
}

void merge_counts(CountMap& into, const CountMap& from) {
    for (const auto& [key, n] : from) {
        into[key] += n;
    }
}

std::vector<SliceCounts> full_outer_join(const CountMap& generated, const CountMap& received) {
    std::vector<SliceCounts> rows;
    rows.reserve(std::max(generated.size(), received.size()));
    for (const auto& [key, n] : generated) {
        auto it = received.find(key);
        rows.push_back(SliceCounts{key, n, it == received.end() ? 0 : it->second});
    }
    for (const auto& [key, n] : received) {
        if (!generated.contains(key)) {
            rows.push_back(SliceCounts{key, 0, n});
        }
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return rows;
}

double ratio_of(const SliceCounts& counts) {
    const auto g = counts.generated;
    const auto r = counts.received;
    if (g >= r) {
        return static_cast<double>(g) / static_cast<double>(std::max<std::uint64_t>(r, 1));
    }
    return -(static_cast<double>(r) / static_cast<double>(std::max<std::uint64_t>(g, 1)));
}

std::string_view to_string(Direction direction) {
    return direction == Direction::ScanSender ? "sender" : "receiver";
}

void DetectorConfig::validate() const {
    if (!std::isfinite(threshold) || threshold <= 0.0) {
        throw ConfigError("detector.threshold", "threshold must be a finite number > 0");
    }
    slice.validate();
}

std::optional<RatioVerdict> judge(const SliceCounts& counts, double threshold) {
    const double ratio = ratio_of(counts);
    if (ratio > threshold) {
        return RatioVerdict{counts.key, counts.generated, counts.received, ratio, Direction::ScanSender};
    }
    if (ratio < -threshold) {
        return RatioVerdict{counts.key, counts.generated, counts.received, ratio, Direction::ScanReceiver};
    }
    return std::nullopt;
}

std::vector<RatioVerdict> apply_threshold(std::span<const SliceCounts> rows, double threshold) {
    std::vector<RatioVerdict> out;
    for (const auto& row : rows) {
        if (auto v = judge(row, threshold)) {
            out.push_back(*v);
        }
    }
    return out;
}

std::vector<RatioVerdict> detect(std::span<const FlowRecord> flows, const DetectorConfig& cfg) {
    cfg.validate();
    const auto rows = full_outer_join(count_by_source(flows, cfg.slice), count_by_destination(flows, cfg.slice));
    return apply_threshold(rows, cfg.threshold);
}

void sort_verdicts(std::vector<RatioVerdict>& verdicts) {
    std::sort(verdicts.begin(), verdicts.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
}

std::set<DirectedIp> anomalous_ips(std::span<const RatioVerdict> verdicts) {
    std::set<DirectedIp> out;
    for (const auto& v : verdicts) {
        out.emplace(v.key.ip, v.direction);
    }
    return out;
}

std::set<IpAddress> flagged_ips(std::span<const RatioVerdict> verdicts) {
    std::set<IpAddress> out;
    for (const auto& v : verdicts) {
        out.insert(v.key.ip);
    }
    return out;
}

}// namespace scandet
