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

#include <scandet/classifier.hpp>
#include <scandet/detector.hpp>
#include <scandet/errors.hpp>
#include <scandet/ingest.hpp>

#include <algorithm>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scandet {

/// Case-insensitive glob patterns selecting the taxonomy labels that denote
/// scanning. A label is kept when it matches an include pattern and no
/// exclude pattern.
struct LabelWhitelist {
    std::vector<std::string> include;
    std::vector<std::string> exclude;

    /// Network and port scan labels, ICMP variants excluded.
    static LabelWhitelist defaults();
    /// Comma or newline separated patterns; a leading '!' marks an exclusion.
    /// Blank entries and '#' comments are ignored.
    static LabelWhitelist parse(std::string_view text);
    static LabelWhitelist load(const std::filesystem::path& path);

    bool matches(std::string_view label) const;
    std::string to_string() const;
};

/// Keeps the non-benign entries whose label passes the whitelist.
GroundTruthSet filter_scan_labels(const GroundTruthSet& gt, const LabelWhitelist& whitelist);

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// tp=|D∩T|, fp=|D\T|, fn=|T\D|, tn=|U\(D∪T)| with truth restricted to the
/// universe. Throws Error for an empty universe or a detection outside it.
template<typename T>
ConfusionMatrix confusion(const std::set<T>& detected, const std::set<T>& truth, const std::set<T>& universe) {
    if (universe.empty()) {
        throw Error("confusion matrix over an empty universe");
    }
    ConfusionMatrix m;
    for (const auto& d : detected) {
        if (!universe.contains(d)) {
            throw Error("detected element outside the evaluation universe");
        }
        if (truth.contains(d)) {
            ++m.tp;
        } else {
            ++m.fp;
        }
    }
    for (const auto& t : truth) {
        if (universe.contains(t) && !detected.contains(t)) {
            ++m.fn;
        }
    }
    m.tn = universe.size() - m.tp - m.fp - m.fn;
    return m;
}

/// nullopt marks an undefined (0/0) score, which is distinct from 0.
struct PRScore {
    std::optional<double> recall;
    std::optional<double> precision;

    friend bool operator==(const PRScore&, const PRScore&) = default;
};

PRScore precision_recall(const ConfusionMatrix& m);

struct AggregateScore {
    double mean = 0.0;
    /// Population variance.
    double variance = 0.0;
    std::size_t n_traces = 0;
    /// Undefined scores left out of the mean.
    std::size_t excluded = 0;
};

/// Throws Error when no defined score is present.
AggregateScore aggregate_metric(std::span<const std::optional<double>> scores);
/// (recall, precision) aggregates.
std::pair<AggregateScore, AggregateScore> aggregate(std::span<const PRScore> scores);

enum class EvalCase { RawMawilab = 1, FilteredMawilab = 2, FilteredPlusRules = 3 };
/// Which ground-truth file(s) to score against.
enum class TruthScope { Anomalous, Notice, Total };

std::string_view to_string(TruthScope scope);
std::optional<TruthScope> parse_truth_scope(std::string_view text);

/// Every distinct address seen in a trace, overall and per role.
struct TraceUniverse {
    std::set<IpAddress> ips;
    std::set<IpAddress> sources;
    std::set<IpAddress> destinations;

    static TraceUniverse of(std::span<const FlowRecord> flows);
};

struct EvalOptions {
    TruthScope scope = TruthScope::Total;
    /// Match senders to ground-truth sources and receivers to destinations
    /// instead of comparing undirected IP sets.
    bool directional = false;
    LabelWhitelist whitelist = LabelWhitelist::defaults();
    RuleConfig rules;
    SliceConfig slice;
};

struct CaseResult {
    ConfusionMatrix matrix;
    PRScore score;
    /// False positives moved to true positives by the post-processing rules.
    std::uint64_t reintegrated = 0;
};

/// Scores detector output for one validation case.
CaseResult evaluate_case(EvalCase which, std::span<const RatioVerdict> verdicts, const GroundTruthSet& gt,
                         std::span<const FlowRecord> flows, const TraceUniverse& universe, const EvalOptions& options);
CaseResult evaluate_case(EvalCase which, std::span<const RatioVerdict> verdicts, const GroundTruthSet& gt,
                         std::span<const FlowRecord> flows, const EvalOptions& options);

struct ReportRow {
    std::string trace_id;
    EvalCase which = EvalCase::RawMawilab;
    double threshold = 0.0;
    TruthScope scope = TruthScope::Total;
    CaseResult result;
};

inline constexpr std::string_view kReportHeader =
    "trace_id,case,threshold,truth,tp,fp,fn,tn,recall,precision,reintegrated";

std::string format_score(const std::optional<double>& score);
std::string format_number(double value);

/// Per-trace rows followed by an aggregate block per (case, metric) whose
/// rows are thresholds and whose columns are the truth scopes, each cell
/// written as mean+-variance.
void write_report(std::ostream& out, std::span<const ReportRow> rows);

}// namespace scandet
