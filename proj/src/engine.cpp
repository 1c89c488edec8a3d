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

#include <scandet/engine.hpp>
#include <scandet/errors.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

namespace scandet {

namespace {

using Clock = std::chrono::steady_clock;

struct PartialCounts {
    CountMap generated;
    CountMap received;
};

/// Runs fn(i) for i in [0, n) on n threads (inline when n == 1). A failing
/// task is reported with the progress it made before throwing.
template<typename Fn>
void run_workers(unsigned n, std::string_view stage, std::vector<std::atomic<std::uint64_t>>& progress, Fn&& fn) {
    if (n == 1) {
        try {
            fn(0U);
        } catch (const std::exception& e) {
            throw EngineError(std::string(stage) + " worker 0 failed after " + std::to_string(progress[0].load())
                              + " records: " + e.what());
        }
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    {
        std::vector<std::jthread> threads;
        threads.reserve(n);
        for (unsigned i = 0; i < n; ++i) {
            threads.emplace_back([&, i] {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
    }
    for (unsigned i = 0; i < n; ++i) {
        if (!errors[i]) {
            continue;
        }
        std::string what = "unknown error";
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        throw EngineError(std::string(stage) + " worker " + std::to_string(i) + " failed after "
                          + std::to_string(progress[i].load()) + " records: " + what);
    }
}

Micros trace_span(std::span<const FlowRecord> flows) {
    if (flows.empty()) {
        return Micros{0};
    }
    Timestamp lo = flows.front().first_seen;
    Timestamp hi = flows.front().last_seen;
    for (const auto& f : flows) {
        lo = std::min(lo, f.first_seen);
        hi = std::max(hi, f.last_seen);
    }
    return hi - lo;
}

/// Per-partition joined rows, each partition sorted.
std::vector<std::vector<SliceCounts>> partitioned_join(std::span<const FlowRecord> flows, const SliceConfig& slice,
                                                       const EngineConfig& engine) {
    const unsigned workers = engine.workers;
    const unsigned partitions = workers;
    auto route = [&](const SliceKey& key) -> unsigned {
        if (partitions == 1) {
            return 0;
        }
        if (engine.partitioning == Partitioning::BySliceIndex) {
            return static_cast<unsigned>(key.slice_index % partitions);
        }
        return static_cast<unsigned>(key.ip.hash() % partitions);
    };

    // map: worker w counts its chunk into local[w][partition]
    std::vector<std::vector<PartialCounts>> local(workers, std::vector<PartialCounts>(partitions));
    std::vector<std::atomic<std::uint64_t>> progress(workers);
    const std::size_t chunk = (flows.size() + workers - 1) / workers;
    run_workers(workers, "count", progress, [&](unsigned w) {
        const std::size_t begin = std::min(flows.size(), w * chunk);
        const std::size_t end = std::min(flows.size(), begin + chunk);
        auto& mine = local[w];
        for (std::size_t i = begin; i < end; ++i) {
            const auto& flow = flows[i];
            const auto k = slice_of(flow, slice);
            const SliceKey src{flow.src, k};
            const SliceKey dst{flow.dst, k};
            ++mine[route(src)].generated[src];
            ++mine[route(dst)].received[dst];
            progress[w].store(i - begin + 1, std::memory_order_relaxed);
        }
    });

    // reduce: partition p merges every worker's share, then joins
    std::vector<std::vector<SliceCounts>> joined(partitions);
    std::vector<std::atomic<std::uint64_t>> merged(partitions);
    run_workers(partitions, "join", merged, [&](unsigned p) {
        PartialCounts acc = std::move(local[0][p]);
        for (unsigned w = 1; w < workers; ++w) {
            merge_counts(acc.generated, local[w][p].generated);
            merge_counts(acc.received, local[w][p].received);
            local[w][p] = {};
            merged[p].store(w, std::memory_order_relaxed);
        }
        joined[p] = full_outer_join(acc.generated, acc.received);
    });
    return joined;
}

}// namespace

std::string_view to_string(Partitioning p) { return p == Partitioning::BySliceIndex ? "slice" : "ip"; }
std::string_view to_string(ExecutionMode m) { return m == ExecutionMode::Batch ? "batch" : "stream"; }

void EngineConfig::validate() const {
    if (workers < 1) {
        throw ConfigError("engine.workers", "must be >= 1");
    }
    if (watermark_lag < Micros::zero()) {
        throw ConfigError("engine.watermark_lag_seconds", "must be >= 0");
    }
}

std::vector<SliceCounts> joined_counts(std::span<const FlowRecord> flows, const SliceConfig& slice,
                                       const EngineConfig& engine) {
    engine.validate();
    slice.validate();
    auto parts = partitioned_join(flows, slice, engine);
    std::vector<SliceCounts> rows;
    for (auto& part : parts) {
        rows.insert(rows.end(), part.begin(), part.end());
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    return rows;
}

BatchResult run_batch(std::span<const FlowRecord> flows, const DetectorConfig& detector, const EngineConfig& engine) {
    engine.validate();
    detector.validate();
    if (engine.mode != ExecutionMode::Batch) {
        throw ConfigError("engine.mode", "run_batch requires batch mode");
    }
    const auto started = Clock::now();

    BatchResult result;
    for (const auto& part : partitioned_join(flows, detector.slice, engine)) {
        auto verdicts = apply_threshold(part, detector.threshold);
        result.verdicts.insert(result.verdicts.end(), verdicts.begin(), verdicts.end());
    }
    sort_verdicts(result.verdicts);

    auto& stats = result.stats;
    stats.wall_time = std::chrono::duration_cast<Micros>(Clock::now() - started);
    stats.trace_duration = trace_span(flows);
    if (stats.trace_duration > Micros::zero()) {
        stats.time_ratio = std::max(stats.wall_time.count(), Micros::rep{1}) / static_cast<double>(stats.trace_duration.count());
    }
    stats.records_in = flows.size();
    stats.verdicts_out = result.verdicts.size();
    return result;
}

StreamingDetector::StreamingDetector(DetectorConfig detector, EngineConfig engine, EmitFn emit)
    : detector_(detector), engine_(engine), emit_(std::move(emit)) {
    detector_.validate();
    engine_.validate();
}

std::optional<Timestamp> StreamingDetector::watermark() const {
    if (!newest_) {
        return std::nullopt;
    }
    return *newest_ - engine_.watermark_lag;
}

void StreamingDetector::push(const FlowRecord& flow) {
    ++records_in_;
    const auto& slice = detector_.slice;
    const auto mark = watermark();
    if (flow.first_seen < slice.trace_start) {
        ++late_dropped_;
        return;
    }
    const auto k = slice_of(flow, slice);
    if (mark && slice.slice_end(k) <= *mark) {
        ++late_dropped_;
        return;
    }
    auto& state = open_[k];
    ++state.generated[SliceKey{flow.src, k}];
    ++state.received[SliceKey{flow.dst, k}];

    if (!newest_ || flow.first_seen > *newest_) {
        newest_ = flow.first_seen;
        close_up_to(*watermark());
    }
}

void StreamingDetector::close(std::map<std::uint64_t, SliceState>::iterator it) {
    const auto rows = full_outer_join(it->second.generated, it->second.received);
    const auto verdicts = apply_threshold(rows, detector_.threshold);
    const auto index = it->first;
    open_.erase(it);
    verdicts_out_ += verdicts.size();
    try {
        emit_(index, verdicts);
    } catch (const std::exception& e) {
        throw EngineError("emit callback failed for slice " + std::to_string(index) + ": " + e.what());
    }
}

void StreamingDetector::close_up_to(Timestamp mark) {
    while (!open_.empty() && detector_.slice.slice_end(open_.begin()->first) <= mark) {
        close(open_.begin());
    }
}

void StreamingDetector::finish() {
    while (!open_.empty()) {
        close(open_.begin());
    }
}

RunStats run_streaming(const FlowSource& source, const DetectorConfig& detector, const EngineConfig& engine,
                       const EmitFn& emit) {
    if (engine.mode != ExecutionMode::Streaming) {
        throw ConfigError("engine.mode", "run_streaming requires stream mode");
    }
    const auto started = Clock::now();
    StreamingDetector streaming(detector, engine, emit);
    std::optional<Timestamp> lo;
    std::optional<Timestamp> hi;
    while (auto flow = source()) {
        lo = lo ? std::min(*lo, flow->first_seen) : flow->first_seen;
        hi = hi ? std::max(*hi, flow->last_seen) : flow->last_seen;
        streaming.push(*flow);
    }
    streaming.finish();

    RunStats stats;
    stats.wall_time = std::chrono::duration_cast<Micros>(Clock::now() - started);
    stats.trace_duration = lo ? *hi - *lo : Micros{0};
    if (stats.trace_duration > Micros::zero()) {
        stats.time_ratio = std::max(stats.wall_time.count(), Micros::rep{1}) / static_cast<double>(stats.trace_duration.count());
    }
    stats.records_in = streaming.records_in();
    stats.verdicts_out = streaming.verdicts_out();
    stats.late_dropped = streaming.late_dropped();
    return stats;
}

}// namespace scandet
