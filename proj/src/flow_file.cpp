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

#include <array>
#include <charconv>
#include <istream>
#include <ostream>

namespace scandet {

namespace {

template<typename T>
bool parse_number(std::string_view text, T& out) {
    if (text.empty()) {
        return false;
    }
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

constexpr std::size_t kFieldCount = 9;

}// namespace

std::optional<FlowRecord> parse_flow_line(std::string_view line) {
    std::array<std::string_view, kFieldCount> fields;
    std::size_t n = 0;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (n == kFieldCount) {
            return std::nullopt;
        }
        fields[n++] = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (n != kFieldCount) {
        return std::nullopt;
    }

    FlowRecord flow;
    std::int64_t first_us = 0;
    std::int64_t last_us = 0;
    std::uint32_t src_port = 0;
    std::uint32_t dst_port = 0;
    if (!parse_number(fields[0], first_us) || !parse_number(fields[1], last_us)) {
        return std::nullopt;
    }
    auto src = IpAddress::parse(fields[2]);
    auto dst = IpAddress::parse(fields[3]);
    if (!src || !dst) {
        return std::nullopt;
    }
    if (!parse_number(fields[4], src_port) || !parse_number(fields[5], dst_port) || src_port > 65535
        || dst_port > 65535) {
        return std::nullopt;
    }
    auto proto = Protocol::parse(fields[6]);
    if (!proto) {
        return std::nullopt;
    }
    if (!parse_number(fields[7], flow.packet_count) || !parse_number(fields[8], flow.byte_count)) {
        return std::nullopt;
    }

    flow.first_seen = from_epoch_us(first_us);
    flow.last_seen = from_epoch_us(last_us);
    flow.src = *src;
    flow.dst = *dst;
    flow.src_port = static_cast<std::uint16_t>(src_port);
    flow.dst_port = static_cast<std::uint16_t>(dst_port);
    flow.protocol = *proto;
    if (!flow.valid()) {
        return std::nullopt;
    }
    return flow;
}

std::string format_flow_line(const FlowRecord& flow) {
    std::string line;
    line.reserve(96);
    line += std::to_string(to_epoch_us(flow.first_seen));
    line += ',';
    line += std::to_string(to_epoch_us(flow.last_seen));
    line += ',';
    line += flow.src.to_string();
    line += ',';
    line += flow.dst.to_string();
    line += ',';
    line += std::to_string(flow.src_port);
    line += ',';
    line += std::to_string(flow.dst_port);
    line += ',';
    line += flow.protocol.to_string();
    line += ',';
    line += std::to_string(flow.packet_count);
    line += ',';
    line += std::to_string(flow.byte_count);
    return line;
}

FlowReader::FlowReader(const std::filesystem::path& path, FlowFileOptions options)
    : owned_(std::make_unique<std::ifstream>(path)), in_(owned_.get()), options_(options) {
    if (!*owned_) {
        throw IoError("cannot open flow file '" + path.string() + "'");
    }
    read_header();
}

FlowReader::FlowReader(std::istream& in, FlowFileOptions options) : in_(&in), options_(options) { read_header(); }

void FlowReader::read_header() {
    if (!std::getline(*in_, line_)) {
        throw ParseError("flow file is empty: missing header");
    }
    ++line_no_;
    if (line_ != kFlowFileHeader) {
        throw ParseError("flow file header mismatch: expected '" + std::string(kFlowFileHeader) + "'");
    }
}

std::optional<FlowRecord> FlowReader::next() {
    while (std::getline(*in_, line_)) {
        ++line_no_;
        if (line_.empty()) {
            continue;
        }
        if (auto flow = parse_flow_line(line_)) {
            ++records_;
            return flow;
        }
        ++malformed_;
        if (options_.strict) {
            throw ParseError("malformed flow at line " + std::to_string(line_no_));
        }
    }
    check_error_ratio();
    return std::nullopt;
}

void FlowReader::check_error_ratio() const {
    const auto total = records_ + malformed_;
    if (total == 0) {
        return;
    }
    const double ratio = static_cast<double>(malformed_) / static_cast<double>(total);
    if (ratio > options_.max_error_ratio) {
        throw ParseError(std::to_string(malformed_) + " of " + std::to_string(total)
                         + " flow lines malformed, above the configured error ratio");
    }
}

std::vector<FlowRecord> read_flow_file(const std::filesystem::path& path, FlowFileOptions options,
                                       FlowReadStats* stats) {
    FlowReader reader(path, options);
    std::vector<FlowRecord> flows;
    while (auto flow = reader.next()) {
        flows.push_back(*flow);
    }
    if (stats != nullptr) {
        stats->records = reader.records();
        stats->malformed = reader.malformed();
    }
    return flows;
}

void write_flows(std::ostream& out, std::span<const FlowRecord> flows) {
    out << kFlowFileHeader << '\n';
    for (const auto& flow : flows) {
        out << format_flow_line(flow) << '\n';
    }
}

void write_flow_file(const std::filesystem::path& path, std::span<const FlowRecord> flows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write flow file '" + path.string() + "'");
    }
    write_flows(out, flows);
    if (!out.flush()) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

}// namespace scandet
