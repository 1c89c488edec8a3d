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

#include <bitset>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scandet {

enum class ScanKind { NetScan, PortScan, NetScanAndPortScan };

std::string_view to_string(ScanKind kind);

/// A label assigned by one post-processing rule together with the counter
/// that satisfied it.
struct ScanLabel {
    ScanKind kind = ScanKind::NetScan;
    /// NetScan: distinct destinations inside the best subnet.
    /// PortScan: distinct destination ports toward the best peer.
    /// NetScanAndPortScan: distinct known-port destinations in the best slice.
    std::uint64_t evidence = 0;
    /// Subnet network address (NetScan) or peer address (PortScan).
    std::optional<IpAddress> witness;
    /// Slice index (NetScanAndPortScan).
    std::optional<std::uint64_t> slice_index;

    friend bool operator==(const ScanLabel&, const ScanLabel&) = default;
};

class PortSet {
  public:
    /// Well-known ports 0-1023.
    static PortSet well_known();
    /// Comma separated list of ports and inclusive ranges, e.g. "22,80,8000-8100".
    static PortSet parse(std::string_view text);

    void insert(std::uint16_t port) { bits_.set(port); }
    bool contains(std::uint16_t port) const { return bits_.test(port); }
    std::size_t size() const { return bits_.count(); }
    bool empty() const { return bits_.none(); }
    std::string to_string() const;

    friend bool operator==(const PortSet&, const PortSet&) = default;

  private:
    std::bitset<65536> bits_;
};

struct RuleConfig {
    /// Setting a minimum to this value disables the rule.
    static constexpr std::uint64_t kDisabled = std::numeric_limits<std::uint64_t>::max();

    /// NetScan: distinct destinations in one subnet, inclusive.
    std::uint64_t netscan_min_flows = 20;
    /// PortScan: distinct ports toward one peer, exclusive (strictly more than).
    std::uint64_t portscan_min_ports = 10;
    /// NetScanAndPortScan: distinct known-port destinations in one slice, inclusive.
    std::uint64_t combined_min_flows_per_slice = 20;
    unsigned subnet_prefix_v4 = 24;
    unsigned subnet_prefix_v6 = 64;
    PortSet known_ports = PortSet::well_known();

    void validate() const;
};

/// Evaluates the three post-processing rules over the outbound flows of a
/// set of candidate IPs. The flow index is built once at construction.
class RuleEvaluator {
  public:
    RuleEvaluator(std::span<const FlowRecord> flows, const std::set<IpAddress>& candidates, RuleConfig rules,
                  SliceConfig slice);

    /// Labels in NetScan, PortScan, NetScanAndPortScan order. Empty for an IP
    /// without outbound flows or one that is not a candidate.
    std::vector<ScanLabel> classify(const IpAddress& ip) const;

  private:
    std::unordered_map<IpAddress, std::vector<const FlowRecord*>, IpAddressHash> outbound_;
    RuleConfig rules_;
    SliceConfig slice_;
};

std::vector<ScanLabel> classify(const IpAddress& ip, std::span<const FlowRecord> flows, const RuleConfig& rules,
                                const SliceConfig& slice);

/// The false positives for which at least one rule fires.
std::set<IpAddress> reintegrate(const std::set<IpAddress>& false_positives, std::span<const FlowRecord> flows,
                                const RuleConfig& rules, const SliceConfig& slice);

}// namespace scandet
