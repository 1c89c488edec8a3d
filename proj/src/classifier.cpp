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

#include <scandet/classifier.hpp>
#include <scandet/errors.hpp>

#include <charconv>
#include <map>

namespace scandet {

namespace {

std::uint16_t parse_port_token(std::string_view text) {
    unsigned value = 0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || value > 65535) {
        throw ConfigError("rules.known_ports", "invalid port '" + std::string(text) + "'");
    }
    return static_cast<std::uint16_t>(value);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

// Largest set in `groups`; ties go to the smallest key.
template<typename Key, typename Value>
std::pair<std::optional<Key>, std::uint64_t> widest(const std::map<Key, std::set<Value>>& groups) {
    std::optional<Key> best;
    std::uint64_t best_size = 0;
    for (const auto& [key, members] : groups) {
        if (members.size() > best_size) {
            best = key;
            best_size = members.size();
        }
    }
    return {best, best_size};
}

}// namespace

std::string_view to_string(ScanKind kind) {
    switch (kind) {
        case ScanKind::NetScan: return "NetScan";
        case ScanKind::PortScan: return "PortScan";
        case ScanKind::NetScanAndPortScan: return "NetScanAndPortScan";
    }
    return "NetScan";
}

PortSet PortSet::well_known() {
    PortSet s;
    for (unsigned p = 0; p < 1024; ++p) {
        s.bits_.set(p);
    }
    return s;
}

PortSet PortSet::parse(std::string_view text) {
    PortSet s;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto token = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!token.empty()) {
            const auto dash = token.find('-');
            if (dash == std::string_view::npos) {
                s.insert(parse_port_token(token));
            } else {
                const auto lo = parse_port_token(trim(token.substr(0, dash)));
                const auto hi = parse_port_token(trim(token.substr(dash + 1)));
                if (lo > hi) {
                    throw ConfigError("rules.known_ports", "empty range '" + std::string(token) + "'");
                }
                for (unsigned p = lo; p <= hi; ++p) {
                    s.bits_.set(p);
                }
            }
        }
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    return s;
}

std::string PortSet::to_string() const {
    std::string out;
    unsigned p = 0;
    while (p < 65536) {
        if (!bits_.test(p)) {
            ++p;
            continue;
        }
        unsigned q = p;
        while (q + 1 < 65536 && bits_.test(q + 1)) {
            ++q;
        }
        if (!out.empty()) {
            out += ',';
        }
        out += std::to_string(p);
        if (q > p) {
            out += '-';
            out += std::to_string(q);
        }
        p = q + 1;
    }
    return out;
}

void RuleConfig::validate() const {
    if (netscan_min_flows < 1) {
        throw ConfigError("rules.netscan_min_flows", "must be >= 1");
    }
    if (portscan_min_ports < 1) {
        throw ConfigError("rules.portscan_min_ports", "must be >= 1");
    }
    if (combined_min_flows_per_slice < 1) {
        throw ConfigError("rules.combined_min_flows_per_slice", "must be >= 1");
    }
    if (subnet_prefix_v4 > 32) {
        throw ConfigError("rules.subnet_prefix_v4", "must be <= 32");
    }
    if (subnet_prefix_v6 > 128) {
        throw ConfigError("rules.subnet_prefix_v6", "must be <= 128");
    }
}

RuleEvaluator::RuleEvaluator(std::span<const FlowRecord> flows, const std::set<IpAddress>& candidates,
                             RuleConfig rules, SliceConfig slice)
    : rules_(std::move(rules)), slice_(slice) {
    rules_.validate();
    slice_.validate();
    for (const auto& ip : candidates) {
        outbound_.try_emplace(ip);
    }
    for (const auto& flow : flows) {
        if (auto it = outbound_.find(flow.src); it != outbound_.end()) {
            it->second.push_back(&flow);
        }
    }
}

std::vector<ScanLabel> RuleEvaluator::classify(const IpAddress& ip) const {
    std::vector<ScanLabel> labels;
    auto it = outbound_.find(ip);
    if (it == outbound_.end() || it->second.empty()) {
        return labels;
    }

    std::map<IpAddress, std::set<IpAddress>> by_subnet;
    std::map<IpAddress, std::set<std::uint16_t>> ports_by_peer;
    std::map<std::uint64_t, std::set<IpAddress>> known_port_peers_by_slice;

    for (const FlowRecord* flow : it->second) {
        const unsigned prefix = flow->dst.is_v4() ? rules_.subnet_prefix_v4 : rules_.subnet_prefix_v6;
        by_subnet[flow->dst.masked(prefix)].insert(flow->dst);
        if (!flow->protocol.has_ports()) {
            continue;
        }
        ports_by_peer[flow->dst].insert(flow->dst_port);
        if (rules_.known_ports.contains(flow->dst_port)) {
            known_port_peers_by_slice[slice_of(*flow, slice_)].insert(flow->dst);
        }
    }

    if (auto [subnet, n] = widest(by_subnet); n >= rules_.netscan_min_flows) {
        labels.push_back(ScanLabel{ScanKind::NetScan, n, subnet, std::nullopt});
    }
    if (auto [peer, n] = widest(ports_by_peer); n > rules_.portscan_min_ports) {
        labels.push_back(ScanLabel{ScanKind::PortScan, n, peer, std::nullopt});
    }
    if (auto [slice, n] = widest(known_port_peers_by_slice); n >= rules_.combined_min_flows_per_slice) {
        labels.push_back(ScanLabel{ScanKind::NetScanAndPortScan, n, std::nullopt, slice});
    }
    return labels;
}

std::vector<ScanLabel> classify(const IpAddress& ip, std::span<const FlowRecord> flows, const RuleConfig& rules,
                                const SliceConfig& slice) {
    return RuleEvaluator(flows, {ip}, rules, slice).classify(ip);
}

std::set<IpAddress> reintegrate(const std::set<IpAddress>& false_positives, std::span<const FlowRecord> flows,
                                const RuleConfig& rules, const SliceConfig& slice) {
    std::set<IpAddress> out;
    if (false_positives.empty()) {
        return out;
    }
    RuleEvaluator evaluator(flows, false_positives, rules, slice);
    for (const auto& ip : false_positives) {
        if (!evaluator.classify(ip).empty()) {
            out.insert(ip);
        }
    }
    return out;
}

}// namespace scandet
