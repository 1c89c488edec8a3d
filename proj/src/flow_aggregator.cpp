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

#include <scandet/errors.hpp>
#include <scandet/ingest.hpp>

namespace scandet {

std::size_t FiveTupleHash::operator()(const FiveTuple& t) const noexcept {
    std::size_t h = t.src.hash();
    h = h * 31 + t.dst.hash();
    h = h * 31 + ((std::size_t{t.src_port} << 24) ^ (std::size_t{t.dst_port} << 8) ^ t.protocol.code);
    return h;
}

FlowAggregator::FlowAggregator(AggregatorOptions options) : options_(options) {
    if (options_.idle_timeout <= Micros::zero()) {
        throw ConfigError("ingest.idle_timeout", "idle timeout must be > 0");
    }
    if (options_.reorder_tolerance < Micros::zero()) {
        throw ConfigError("ingest.reorder_tolerance", "reorder tolerance must be >= 0");
    }
}

void FlowAggregator::expire(Timestamp now, std::vector<FlowRecord>& out) {
    while (!expiry_.empty()) {
        auto it = expiry_.begin();
        if (now - it->first.first < options_.idle_timeout) {
            break;
        }
        auto node = active_.find(it->second);
        out.push_back(node->second.flow);
        active_.erase(node);
        expiry_.erase(it);
    }
}

void FlowAggregator::push(const PacketSummary& packet, std::vector<FlowRecord>& out) {
    const Timestamp ts = packet.timestamp;
    if (newest_ && ts < *newest_ - options_.reorder_tolerance) {
        if (options_.strict) {
            throw ParseError("packet at " + std::to_string(to_epoch_us(ts)) + " is out of order beyond tolerance");
        }
        ++dropped_;
        return;
    }
    if (!newest_ || ts > *newest_) {
        newest_ = ts;
    }
    expire(*newest_, out);

    FiveTuple key{packet.src, packet.dst, packet.src_port, packet.dst_port, packet.protocol};
    if (!key.protocol.has_ports()) {
        key.src_port = 0;
        key.dst_port = 0;
    }

    auto [it, inserted] = active_.try_emplace(key);
    Active& active = it->second;
    if (inserted) {
        active.seq = next_seq_++;
        active.flow = FlowRecord{key.src, key.dst, key.src_port, key.dst_port, key.protocol, ts, ts, 1, packet.length};
        expiry_.emplace(ExpiryKey{ts, active.seq}, key);
        return;
    }

    // A reordered packet can predate the flow's current bounds.
    FlowRecord& flow = active.flow;
    flow.packet_count += 1;
    flow.byte_count += packet.length;
    if (ts < flow.first_seen) {
        flow.first_seen = ts;
    }
    if (ts > flow.last_seen) {
        expiry_.erase(ExpiryKey{flow.last_seen, active.seq});
        flow.last_seen = ts;
        expiry_.emplace(ExpiryKey{ts, active.seq}, key);
    }
}

void FlowAggregator::finish(std::vector<FlowRecord>& out) {
    for (const auto& [when, key] : expiry_) {
        out.push_back(active_.at(key).flow);
    }
    expiry_.clear();
    active_.clear();
}

std::vector<FlowRecord> aggregate_packets(std::span<const PacketSummary> packets, AggregatorOptions options) {
    FlowAggregator aggregator(options);
    std::vector<FlowRecord> flows;
    for (const auto& packet : packets) {
        aggregator.push(packet, flows);
    }
    aggregator.finish(flows);
    return flows;
}

}// namespace scandet
