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

#include <scandet/detector.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace scandet {

enum class Partitioning { BySliceIndex, ByIpHash };
enum class ExecutionMode { Batch, Streaming };

std::string_view to_string(Partitioning p);
std::string_view to_string(ExecutionMode m);

struct EngineConfig {
    unsigned workers = 1;
    Partitioning partitioning = Partitioning::BySliceIndex;
    ExecutionMode mode = ExecutionMode::Batch;
    /// Streaming only: the watermark trails the newest first_seen by this much.
    Micros watermark_lag = std::chrono::seconds{5};

    void validate() const;
};

struct RunStats {
    Micros wall_time{0};
    /// Span between the earliest first_seen and the latest last_seen.
    Micros trace_duration{0};
    /// wall_time / trace_duration; nullopt when the trace has zero duration.
    std::optional<double> time_ratio;
    std::uint64_t records_in = 0;
    std::uint64_t verdicts_out = 0;
    /// Streaming only: flows that arrived after their slice was closed.
    std::uint64_t late_dropped = 0;
};

struct BatchResult {
    std::vector<RatioVerdict> verdicts;
    RunStats stats;
};

/// Joined per-(IP, slice) counts computed on `engine.workers` threads.
/// Each worker counts a contiguous chunk of the input into per-partition maps;
/// each partition is then merged by per-key addition and joined on its own
/// worker. Sorted by (slice_index, ip).
std::vector<SliceCounts> joined_counts(std::span<const FlowRecord> flows, const SliceConfig& slice,
                                       const EngineConfig& engine);

/// Data-parallel equivalent of detect(). Output is identical to detect() for
/// every worker count and partitioning. Throws EngineError when a worker fails.
BatchResult run_batch(std::span<const FlowRecord> flows, const DetectorConfig& detector, const EngineConfig& engine);

/// Receives the verdicts of one closed slice, sorted by ip.
using EmitFn = std::function<void(std::uint64_t slice_index, std::span<const RatioVerdict> verdicts)>;

/// Incremental detector. A slice is closed, and its verdicts emitted exactly
/// once, when the watermark (newest first_seen - watermark_lag) reaches the
/// slice's end. Flows for closed slices, or that precede trace_start, are
/// dropped and counted.
class StreamingDetector {
  public:
    StreamingDetector(DetectorConfig detector, EngineConfig engine, EmitFn emit);

    void push(const FlowRecord& flow);
    /// Closes every open slice in order.
    void finish();

    std::uint64_t records_in() const noexcept { return records_in_; }
    std::uint64_t late_dropped() const noexcept { return late_dropped_; }
    std::uint64_t verdicts_out() const noexcept { return verdicts_out_; }
    std::optional<Timestamp> watermark() const;
    std::size_t open_slices() const noexcept { return open_.size(); }

  private:
    struct SliceState {
        CountMap generated;
        CountMap received;
    };

    void close(std::map<std::uint64_t, SliceState>::iterator it);
    void close_up_to(Timestamp watermark);

    DetectorConfig detector_;
    EngineConfig engine_;
    EmitFn emit_;
    std::map<std::uint64_t, SliceState> open_;
    std::optional<Timestamp> newest_;
    std::uint64_t records_in_ = 0;
    std::uint64_t late_dropped_ = 0;
    std::uint64_t verdicts_out_ = 0;
};

using FlowSource = std::function<std::optional<FlowRecord>()>;

/// Pulls flows from `source` until it is exhausted, then flushes. Callback
/// exceptions abort the run as EngineError.
RunStats run_streaming(const FlowSource& source, const DetectorConfig& detector, const EngineConfig& engine,
                       const EmitFn& emit);

}// namespace scandet
