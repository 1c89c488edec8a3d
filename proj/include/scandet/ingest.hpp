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

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scandet {

// ---------------------------------------------------------------------------
// Flow files
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFlowFileHeader = "first_seen_us,last_seen_us,src_ip,dst_ip,src_port,dst_port,proto,packets,bytes";

struct FlowFileOptions {
    /// Abort on the first malformed line instead of skipping it.
    bool strict = false;
    /// Lenient mode only: fail at end of input when malformed/total exceeds this.
    double max_error_ratio = 1.0;
};

/// Parses one data line. Returns nullopt for anything malformed, including
/// out-of-range ports, last_seen < first_seen and zero packets.
std::optional<FlowRecord> parse_flow_line(std::string_view line);
std::string format_flow_line(const FlowRecord& flow);

/// Streaming reader over the delimited flow format. Yields records in file
/// order; malformed lines are counted and skipped unless strict.
class FlowReader {
  public:
    /// Throws IoError if the file cannot be opened, ParseError on header mismatch.
    explicit FlowReader(const std::filesystem::path& path, FlowFileOptions options = {});
    /// Reads from a caller-owned stream.
    explicit FlowReader(std::istream& in, FlowFileOptions options = {});

    std::optional<FlowRecord> next();

    std::size_t records() const noexcept { return records_; }
    std::size_t malformed() const noexcept { return malformed_; }

  private:
    void read_header();
    void check_error_ratio() const;

    std::unique_ptr<std::ifstream> owned_;
    std::istream* in_;
    FlowFileOptions options_;
    std::size_t line_no_ = 0;
    std::size_t records_ = 0;
    std::size_t malformed_ = 0;
    std::string line_;
};

struct FlowReadStats {
    std::size_t records = 0;
    std::size_t malformed = 0;
};

std::vector<FlowRecord> read_flow_file(const std::filesystem::path& path, FlowFileOptions options = {},
                                       FlowReadStats* stats = nullptr);
void write_flows(std::ostream& out, std::span<const FlowRecord> flows);
void write_flow_file(const std::filesystem::path& path, std::span<const FlowRecord> flows);

// ---------------------------------------------------------------------------
// Packet to flow aggregation
// ---------------------------------------------------------------------------

struct PacketSummary {
    Timestamp timestamp{};
    IpAddress src;
    IpAddress dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::tcp();
    std::uint64_t length = 0;
};

struct FiveTuple {
    IpAddress src;
    IpAddress dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol;

    friend auto operator<=>(const FiveTuple&, const FiveTuple&) = default;
    friend bool operator==(const FiveTuple&, const FiveTuple&) = default;
};

struct FiveTupleHash {
    std::size_t operator()(const FiveTuple& t) const noexcept;
};

struct AggregatorOptions {
    Micros idle_timeout = std::chrono::seconds{60};
    /// How far a packet may lag behind the newest timestamp seen so far.
    Micros reorder_tolerance = Micros::zero();
    /// Throw ParseError on a packet beyond the tolerance instead of dropping it.
    bool strict = false;
};

/// Groups packets into unidirectional 5-tuple flows. A gap >= idle_timeout
/// closes a flow; closed flows are appended to the caller's buffer ordered by
/// (last_seen, creation order).
class FlowAggregator {
  public:
    explicit FlowAggregator(AggregatorOptions options = {});

    void push(const PacketSummary& packet, std::vector<FlowRecord>& out);
    /// Flushes every active flow.
    void finish(std::vector<FlowRecord>& out);

    std::size_t active_flows() const noexcept { return active_.size(); }
    std::size_t dropped_packets() const noexcept { return dropped_; }

  private:
    struct Active {
        FlowRecord flow;
        std::uint64_t seq = 0;
    };
    using ExpiryKey = std::pair<Timestamp, std::uint64_t>;

    void expire(Timestamp now, std::vector<FlowRecord>& out);

    AggregatorOptions options_;
    std::unordered_map<FiveTuple, Active, FiveTupleHash> active_;
    std::map<ExpiryKey, FiveTuple> expiry_;
    std::optional<Timestamp> newest_;
    std::uint64_t next_seq_ = 0;
    std::size_t dropped_ = 0;
};

std::vector<FlowRecord> aggregate_packets(std::span<const PacketSummary> packets, AggregatorOptions options = {});

// ---------------------------------------------------------------------------
// Ground truth (MAWILab admd XML)
// ---------------------------------------------------------------------------

enum class Category { Anomalous, Suspicious, Notice, Benign };
enum class SourceFile { AnomalousFile, NoticeFile };

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

/// One <filter> element. Ports and protocol are kept but comparisons are
/// made at IP granularity only.
struct TrafficFilter {
    std::optional<IpAddress> src_ip;
    std::optional<IpAddress> dst_ip;
    std::optional<std::uint16_t> src_port;
    std::optional<std::uint16_t> dst_port;
    std::string protocol;

    friend bool operator==(const TrafficFilter&, const TrafficFilter&) = default;
};

struct GroundTruthEntry {
    Category category = Category::Anomalous;
    std::string taxonomy_label;
    std::set<IpAddress> src_ips;
    std::set<IpAddress> dst_ips;
    SourceFile source_file = SourceFile::AnomalousFile;
    std::vector<TrafficFilter> filters;

    std::set<IpAddress> ip_set() const;

    friend bool operator==(const GroundTruthEntry&, const GroundTruthEntry&) = default;
};

struct GroundTruthSet {
    std::vector<GroundTruthEntry> entries;

    /// Every address named by any entry, optionally restricted to one file.
    std::set<IpAddress> ip_set(std::optional<SourceFile> file = std::nullopt) const;
    std::set<IpAddress> src_ip_set(std::optional<SourceFile> file = std::nullopt) const;
    std::set<IpAddress> dst_ip_set(std::optional<SourceFile> file = std::nullopt) const;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

struct GroundTruthOptions {
    /// Abort on the first rejected anomaly instead of warning and skipping it.
    bool strict = false;
};

/// Parses one admd document. Rejected entries append a message to `warnings`
/// (when given). Throws GroundTruthError on malformed XML, or on any rejected
/// entry in strict mode.
GroundTruthSet parse_ground_truth(std::istream& in, SourceFile file, GroundTruthOptions options = {},
                                  std::vector<std::string>* warnings = nullptr);

/// Reads the anomalous and notice files. Either path may be omitted.
GroundTruthSet read_ground_truth(const std::optional<std::filesystem::path>& anomalous_path,
                                 const std::optional<std::filesystem::path>& notice_path,
                                 GroundTruthOptions options = {}, std::vector<std::string>* warnings = nullptr);

/// Serialises entries as an admd document that parse_ground_truth reads back.
void write_ground_truth(std::ostream& out, std::span<const GroundTruthEntry> entries);

}// namespace scandet
