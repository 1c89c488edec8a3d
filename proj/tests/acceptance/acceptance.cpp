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

#include "reference.hpp"

#include <scandet/cli/commands.hpp>
#include <scandet/cli/synth.hpp>
#include <scandet/engine.hpp>
#include <scandet/eval.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace scandet;
using scandet::testing::TempDir;

namespace {

using Clock = std::chrono::steady_clock;

const std::filesystem::path kFixtures = SCANDET_FIXTURE_DIR;

struct Outcome {
    enum class Status { Pass, Fail, Skip } status;
    std::string detail;
};

Outcome pass(std::string d) { return {Outcome::Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Outcome::Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Outcome::Status::Skip, std::move(d)}; }

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), pattern, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int run_cli(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "scandet");
    std::ostringstream o;
    std::ostringstream e;
    const int code = cli::run(args, o, e);
    if (out != nullptr) {
        *out = o.str();
    }
    if (code != 0) {
        std::cerr << e.str();
    }
    return code;
}

std::int64_t earliest_us(const std::vector<FlowRecord>& flows) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max();
    for (const auto& f : flows) {
        lo = std::min(lo, to_epoch_us(f.first_seen));
    }
    return flows.empty() ? 0 : lo;
}

DetectorConfig detector_for(const std::vector<FlowRecord>& flows, double threshold) {
    DetectorConfig d;
    d.threshold = threshold;
    d.slice = slice_config_for(flows);
    return d;
}

struct SynthFixture {
    std::vector<FlowRecord> flows;
    GroundTruthSet gt;
    std::vector<IpAddress> scanners;
};

// Runs the synth command and loads its outputs.
SynthFixture synth(const TempDir& dir, const std::string& name, const std::string& spec, std::uint64_t seed) {
    scandet::testing::spit(dir / (name + ".json"), spec);
    const auto out = dir / (name + ".csv");
    if (run_cli({"synth", (dir / (name + ".json")).string(), "-o", out.string(), "--seed", std::to_string(seed)}) != 0) {
        throw std::runtime_error("synth failed for " + name);
    }
    SynthFixture f;
    f.flows = read_flow_file(out);
    f.gt = read_ground_truth(out.string() + ".anomalous.xml", out.string() + ".notice.xml");
    f.scanners = cli::synthesize(cli::SynthSpec::from_json(nlohmann::json::parse(spec)), seed).scanners;
    return f;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20180101);
    std::size_t total_flows = 0;
    std::size_t total_verdicts = 0;
    for (int trace = 0; trace < 100; ++trace) {
        scandet::testing::TraceShape shape;
        shape.flows = 1 + rng() % 10'000;
        shape.hosts = 2 + rng() % 300;
        shape.scanners = rng() % 6;
        shape.span_us = static_cast<std::int64_t>(30 + rng() % 900) * 1'000'000;
        shape.scan_share = static_cast<double>(rng() % 50) / 100.0;
        const auto flows = scandet::testing::random_trace(rng, shape);
        const double threshold = std::vector<double>{1.5, 5, 20, 50, 100}[rng() % 5];

        const auto got = scandet::testing::render(detect(flows, detector_for(flows, threshold)));
        const auto want = scandet::testing::render(
            scandet::testing::naive_detect(flows, earliest_us(flows), 30'000'000, threshold));
        if (got != want) {
            return fail(fmt("trace %d (%zu flows, threshold %g) differs from the reference", trace, flows.size(), threshold));
        }
        total_flows += flows.size();
        total_verdicts += static_cast<std::size_t>(std::count(got.begin(), got.end(), '\n'));
    }
    const double s = seconds_since(t0);
    const auto detail = fmt("100 traces, %zu flows, %zu verdicts byte-identical; %.2f s (limit 60 s)", total_flows,
                            total_verdicts, s);
    return s < 60.0 ? pass(detail) : fail(detail);
}

constexpr const char* kPlantedSpec = R"({
  "slices": 30,
  "background": {"hosts": 200, "sessions_per_slice": 4},
  "scanners": [{"kind": "netscan", "count": 3, "flows_per_slice": 120}]
})";

Outcome planted_recovery() {
    const auto t0 = Clock::now();
    TempDir dir;
    const auto fx = synth(dir, "planted", kPlantedSpec, 7);
    const std::set<IpAddress> scanners(fx.scanners.begin(), fx.scanners.end());
    if (scanners.size() != 3) {
        return fail("synth did not plant 3 scanners");
    }
    for (const auto& f : fx.flows) {
        if (scanners.contains(f.dst)) {
            return fail("scanner " + f.dst.to_string() + " receives inbound traffic");
        }
    }
    const auto universe = TraceUniverse::of(fx.flows);
    const auto truth = fx.gt.ip_set();
    std::string detail;
    for (double t : {50.0, 100.0}) {
        const auto flagged = flagged_ips(detect(fx.flows, detector_for(fx.flows, t)));
        const auto score = precision_recall(confusion(flagged, truth, universe.ips));
        if (flagged != scanners || score.recall != 1.0 || score.precision != 1.0) {
            return fail(fmt("threshold %g flagged %zu IPs (recall %s, precision %s)", t, flagged.size(),
                            format_score(score.recall).c_str(), format_score(score.precision).c_str()));
        }
        detail += fmt("T=%g: flagged 3/3, recall 1, precision 1; ", t);
    }
    const double s = seconds_since(t0);
    detail += fmt("%zu flows, %.2f s (limit 10 s)", fx.flows.size(), s);
    return s < 10.0 ? pass(detail) : fail(detail);
}

Outcome threshold_monotonicity() {
    const auto t0 = Clock::now();
    TempDir dir;
    std::vector<std::vector<FlowRecord>> fixtures;
    fixtures.push_back(synth(dir, "planted", kPlantedSpec, 7).flows);
    const char* specs[] = {
        R"({"slices": 20, "background": {"hosts": 80},
            "scanners": [{"kind": "netscan", "flows_per_slice": 60}, {"kind": "netscan", "flows_per_slice": 150},
                         {"kind": "netscan", "flows_per_slice": 250}, {"kind": "portscan", "flows_per_slice": 180}]})",
        R"({"slices": 10, "background": {"hosts": 30, "sessions_per_slice": 20},
            "scanners": [{"kind": "portscan", "count": 2, "flows_per_slice": 90, "slices": [1, 3, 5]},
                         {"kind": "netscan", "flows_per_slice": 210, "slices": [0, 9]}]})",
        R"({"slices": 6, "slice_seconds": 10, "background": {"hosts": 12},
            "scanners": [{"kind": "netscan", "count": 4, "flows_per_slice": 101}]})",
    };
    int i = 0;
    for (const char* spec : specs) {
        fixtures.push_back(synth(dir, "mono" + std::to_string(i), spec, 100 + static_cast<std::uint64_t>(i)).flows);
        ++i;
    }
    std::mt19937_64 rng(4242);
    for (int k = 0; k < 20; ++k) {
        scandet::testing::TraceShape shape;
        shape.flows = 5000;
        shape.hosts = 2 + rng() % 40;
        shape.scanners = 1 + rng() % 5;
        shape.scan_share = 0.6;
        fixtures.push_back(scandet::testing::random_trace(rng, shape));
    }

    std::size_t sizes[3] = {0, 0, 0};
    for (std::size_t n = 0; n < fixtures.size(); ++n) {
        const auto& flows = fixtures[n];
        const auto at50 = anomalous_ips(detect(flows, detector_for(flows, 50)));
        const auto at100 = anomalous_ips(detect(flows, detector_for(flows, 100)));
        const auto at200 = anomalous_ips(detect(flows, detector_for(flows, 200)));
        if (!std::includes(at100.begin(), at100.end(), at200.begin(), at200.end())
            || !std::includes(at50.begin(), at50.end(), at100.begin(), at100.end())) {
            return fail(fmt("fixture %zu violates 200 <= 100 <= 50", n));
        }
        sizes[0] += at50.size();
        sizes[1] += at100.size();
        sizes[2] += at200.size();
    }
    const double s = seconds_since(t0);
    const auto detail = fmt("%zu fixtures; total flagged 50:%zu >= 100:%zu >= 200:%zu; %.2f s (limit 10 s)",
                            fixtures.size(), sizes[0], sizes[1], sizes[2], s);
    return s < 10.0 ? pass(detail) : fail(detail);
}

Outcome case_three_improvement() {
    const auto t0 = Clock::now();
    TempDir dir;
    // Scanners missing from filtered truth: omitted entirely, or present only
    // under a non-scan label that filtering removes.
    const char* specs[] = {
        R"({"slices": 10, "background": {"hosts": 60},
            "scanners": [{"kind": "netscan", "count": 2, "in_ground_truth": false},
                         {"kind": "portscan", "in_ground_truth": false, "flows_per_slice": 150},
                         {"kind": "netscan", "label": "ntscSYN"}]})",
        R"({"slices": 8, "background": {"hosts": 40},
            "scanners": [{"kind": "netscan", "label": "DoS"},
                         {"kind": "portscan", "label": "alphaflow", "category": "notice", "flows_per_slice": 130},
                         {"kind": "netscan", "label": "ptscSYN", "category": "notice"}],
            "decoys": [{"label": "DDoS", "count": 3}, {"label": "ntscSYN", "count": 2}]})",
        R"({"slices": 5, "background": {"hosts": 25},
            "scanners": [{"kind": "netscan", "count": 3, "in_ground_truth": false, "flows_per_slice": 200}],
            "decoys": [{"label": "ntscICMP"}, {"label": "ptscUDP", "category": "notice"}]})",
    };
    std::size_t comparisons = 0;
    std::size_t reintegrated = 0;
    std::size_t improved = 0;
    int n = 0;
    for (const char* spec : specs) {
        const auto fx = synth(dir, "case3_" + std::to_string(n), spec, 300 + static_cast<std::uint64_t>(n));
        for (double t : {50.0, 100.0, 200.0}) {
            const auto verdicts = detect(fx.flows, detector_for(fx.flows, t));
            for (auto scope : {TruthScope::Anomalous, TruthScope::Notice, TruthScope::Total}) {
                EvalOptions opt;
                opt.scope = scope;
                opt.slice = slice_config_for(fx.flows);
                const auto c2 = evaluate_case(EvalCase::FilteredMawilab, verdicts, fx.gt, fx.flows, opt);
                const auto c3 = evaluate_case(EvalCase::FilteredPlusRules, verdicts, fx.gt, fx.flows, opt);
                auto not_worse = [](const std::optional<double>& two, const std::optional<double>& three) {
                    if (!two) {
                        return true;
                    }
                    return three && *three >= *two;
                };
                if (!not_worse(c2.score.recall, c3.score.recall) || !not_worse(c2.score.precision, c3.score.precision)) {
                    return fail(fmt("fixture %d threshold %g %s: case 2 (r=%s p=%s) vs case 3 (r=%s p=%s)", n, t,
                                    std::string(to_string(scope)).c_str(), format_score(c2.score.recall).c_str(),
                                    format_score(c2.score.precision).c_str(), format_score(c3.score.recall).c_str(),
                                    format_score(c3.score.precision).c_str()));
                }
                ++comparisons;
                reintegrated += c3.reintegrated;
                improved += c3.score.precision != c2.score.precision ? 1 : 0;
            }
        }
        ++n;
    }
    const double s = seconds_since(t0);
    const auto detail = fmt("%zu comparisons, %zu with higher case-3 precision, %zu FPs reintegrated; %.2f s (limit 10 s)",
                            comparisons, improved, reintegrated, s);
    return s < 10.0 && reintegrated > 0 ? pass(detail) : fail(detail);
}

Outcome confusion_correctness() {
    struct Case {
        ConfusionMatrix m;
        std::optional<double> recall;
        std::optional<double> precision;
    };
    // hand-computed; undefined where the denominator is zero
    const std::vector<Case> cases = {
        {{3, 0, 1, 0}, 0.75, 1.0},
        {{0, 5, 0, 0}, std::nullopt, 0.0},
        {{293, 100, 707, 0}, 0.293, 0.745547073791348},
        {{0, 0, 0, 10}, std::nullopt, std::nullopt},
        {{0, 0, 4, 6}, 0.0, std::nullopt},
        {{10, 10, 10, 10}, 0.5, 0.5},
        {{1, 2, 3, 4}, 0.25, 0.333333333333333},
        {{7, 0, 0, 0}, 1.0, 1.0},
        {{5, 15, 0, 80}, 1.0, 0.25},
        {{2, 8, 8, 82}, 0.2, 0.2},
    };
    auto same = [](const std::optional<double>& got, const std::optional<double>& want) {
        if (got.has_value() != want.has_value()) {
            return false;
        }
        return !got || std::abs(*got - *want) <= 1e-12;
    };
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto s = precision_recall(cases[i].m);
        if (!same(s.recall, cases[i].recall) || !same(s.precision, cases[i].precision)) {
            return fail(fmt("matrix %zu: got recall %s precision %s", i, format_score(s.recall).c_str(),
                            format_score(s.precision).c_str()));
        }
    }
    // the same matrices rebuilt from sets must come back unchanged
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& m = cases[i].m;
        std::set<std::uint64_t> detected;
        std::set<std::uint64_t> truth;
        std::set<std::uint64_t> universe;
        std::uint64_t id = 0;
        for (std::uint64_t k = 0; k < m.tp; ++k, ++id) {
            detected.insert(id);
            truth.insert(id);
        }
        for (std::uint64_t k = 0; k < m.fp; ++k, ++id) {
            detected.insert(id);
        }
        for (std::uint64_t k = 0; k < m.fn; ++k, ++id) {
            truth.insert(id);
        }
        id += m.tn;
        for (std::uint64_t k = 0; k < id; ++k) {
            universe.insert(k);
        }
        if (confusion(detected, truth, universe) != m) {
            return fail(fmt("matrix %zu not reproduced from sets", i));
        }
    }
    return pass("10 fixed matrices incl. 4 zero-denominator cells; tolerance 1e-12");
}

Outcome parallel_determinism() {
    const auto t0 = Clock::now();
    TempDir dir;
    const char* spec = R"({"slices": 240, "background": {"hosts": 500, "sessions_per_slice": 4},
                           "scanners": [{"kind": "netscan", "count": 3, "flows_per_slice": 120}]})";
    scandet::testing::spit(dir / "big.json", spec);
    const auto flows_path = dir / "big.csv";
    if (run_cli({"synth", (dir / "big.json").string(), "-o", flows_path.string(), "--seed", "1"}) != 0) {
        return fail("synth failed");
    }

    std::vector<std::string> files;
    for (unsigned w : {1U, 2U, 8U}) {
        const auto sub = dir / ("w" + std::to_string(w));
        std::filesystem::create_directory(sub);
        if (run_cli({"detect", flows_path.string(), "-o", (sub / "verdicts.csv").string(), "--workers", std::to_string(w)}) != 0) {
            return fail("detect failed for workers=" + std::to_string(w));
        }
        files.push_back(scandet::testing::slurp(sub / "verdicts.csv"));
    }
    const bool identical = files[0] == files[1] && files[0] == files[2];

    const auto flows = read_flow_file(flows_path);
    const auto d = detector_for(flows, 100);
    auto median_wall = [&](unsigned workers) {
        EngineConfig e;
        e.workers = workers;
        std::vector<double> walls;
        for (int rep = 0; rep < 5; ++rep) {
            walls.push_back(static_cast<double>(run_batch(flows, d, e).stats.wall_time.count()) / 1e6);
        }
        return cli::five_number_summary(walls)[2];
    };
    const double w1 = median_wall(1);
    const double w2 = median_wall(2);
    const double ratio = w2 / w1;
    const double s = seconds_since(t0);
    const unsigned cores = std::thread::hardware_concurrency();

    const auto detail = fmt("%zu flows; verdict files %s across workers {1,2,8}; median wall w1=%.3f s w2=%.3f s "
                            "ratio %.3f (limit 0.90); %u hardware threads; %.1f s (limit 300 s)",
                            flows.size(), identical ? "identical" : "DIFFER", w1, w2, ratio, cores, s);
    return identical && ratio <= 0.9 && s < 300.0 ? pass(detail) : fail(detail);
}

Outcome streaming_equivalence() {
    std::mt19937_64 rng(777);
    std::size_t verdicts = 0;
    for (int k = 0; k < 50; ++k) {
        auto flows = scandet::testing::random_trace(rng);
        std::stable_sort(flows.begin(), flows.end(),
                         [](const FlowRecord& a, const FlowRecord& b) { return a.first_seen < b.first_seen; });
        const auto d = detector_for(flows, 1 + static_cast<double>(rng() % 30));
        EngineConfig e;
        e.mode = ExecutionMode::Streaming;
        e.watermark_lag = Micros{static_cast<std::int64_t>(rng() % 6'000'000)};

        std::vector<RatioVerdict> emitted;
        std::size_t i = 0;
        const auto stats = run_streaming(
            [&]() -> std::optional<FlowRecord> { return i < flows.size() ? std::optional(flows[i++]) : std::nullopt; },
            d, e, [&](std::uint64_t, std::span<const RatioVerdict> v) { emitted.insert(emitted.end(), v.begin(), v.end()); });
        const auto batch = run_batch(flows, d, EngineConfig{}).verdicts;
        if (emitted != batch || stats.late_dropped != 0) {
            return fail(fmt("fixture %d: %zu streamed vs %zu batch verdicts, %llu dropped", k, emitted.size(),
                            batch.size(), static_cast<unsigned long long>(stats.late_dropped)));
        }
        verdicts += batch.size();
    }
    return pass(fmt("50 in-order fixtures, %zu verdicts, exact match", verdicts));
}

GroundTruthEntry expected(Category c, std::string label, std::vector<std::string> src, std::vector<std::string> dst,
                          SourceFile file, std::vector<TrafficFilter> filters) {
    GroundTruthEntry e;
    e.category = c;
    e.taxonomy_label = std::move(label);
    for (const auto& s : src) {
        e.src_ips.insert(IpAddress::from_string(s));
    }
    for (const auto& s : dst) {
        e.dst_ips.insert(IpAddress::from_string(s));
    }
    e.source_file = file;
    e.filters = std::move(filters);
    return e;
}

TrafficFilter filter(const char* src, const char* dst, std::optional<std::uint16_t> dport, const char* proto) {
    TrafficFilter f;
    if (src != nullptr) {
        f.src_ip = IpAddress::from_string(src);
    }
    if (dst != nullptr) {
        f.dst_ip = IpAddress::from_string(dst);
    }
    f.dst_port = dport;
    f.protocol = proto;
    return f;
}

Outcome ground_truth_golden() {
    const auto A = SourceFile::AnomalousFile;
    const auto N = SourceFile::NoticeFile;
    const std::vector<GroundTruthEntry> want = {
        expected(Category::Anomalous, "ntscACK", {"203.0.113.5"}, {}, A, {filter("203.0.113.5", nullptr, {}, "6")}),
        expected(Category::Anomalous, "ptscSYN", {"198.51.100.1", "198.51.100.2"}, {"192.0.2.80"}, A,
                 {filter("198.51.100.1", "192.0.2.80", {}, "6"), filter("198.51.100.2", "192.0.2.80", 22, "6")}),
        expected(Category::Anomalous, "DoS", {}, {"192.0.2.10"}, A, {filter(nullptr, "192.0.2.10", 80, "6")}),
        expected(Category::Suspicious, "ntscICMP", {"203.0.113.9"}, {}, A, {filter("203.0.113.9", nullptr, {}, "1")}),
        expected(Category::Anomalous, "DDoS", {"198.51.100.77"}, {"192.0.2.11"}, A,
                 {filter("198.51.100.77", nullptr, {}, ""), filter(nullptr, "192.0.2.11", {}, "")}),
        expected(Category::Notice, "ptscUDP", {"203.0.113.20"}, {"192.0.2.21"}, N,
                 {filter("203.0.113.20", "192.0.2.21", {}, "17")}),
        expected(Category::Benign, "ntscSYN", {"203.0.113.30"}, {}, N, {filter("203.0.113.30", nullptr, {}, "")}),
        expected(Category::Notice, "sntscSYN", {"2001:db8::5"}, {}, N, {filter("2001:db8::5", nullptr, {}, "")}),
    };
    const auto gt = read_ground_truth(kFixtures / "anomalous.xml", kFixtures / "notice.xml");
    if (gt.entries != want) {
        return fail(fmt("parsed %zu entries, expected set differs", gt.size()));
    }
    if (!read_ground_truth(kFixtures / "empty.xml", std::nullopt).empty()) {
        return fail("empty dataset produced entries");
    }

    const auto kept = filter_scan_labels(gt, LabelWhitelist::defaults());
    std::vector<std::string> removed;
    std::size_t j = 0;
    for (const auto& e : gt.entries) {
        if (j < kept.size() && kept.entries[j] == e) {
            ++j;
        } else {
            removed.push_back(e.taxonomy_label + "/" + std::string(to_string(e.category)));
        }
    }
    const std::vector<std::string> want_removed = {"DoS/anomalous", "ntscICMP/suspicious", "DDoS/anomalous",
                                                   "ntscSYN/benign"};
    if (j != kept.size() || removed != want_removed) {
        std::string got;
        for (const auto& r : removed) {
            got += r + " ";
        }
        return fail("filter removed: " + got);
    }
    return pass("8 entries over 2 files parsed exactly (multi-IP filters, ICMP, IPv6); filter removed DoS, ICMP, DDoS, benign");
}

Outcome mawi_integration() {
    const char* flows = std::getenv("SCANDET_MAWI_FLOWS");
    const char* anomalous = std::getenv("SCANDET_MAWI_ANOMALOUS");
    const char* notice = std::getenv("SCANDET_MAWI_NOTICE");
    if (flows == nullptr || anomalous == nullptr || notice == nullptr) {
        return skip("set SCANDET_MAWI_FLOWS, SCANDET_MAWI_ANOMALOUS and SCANDET_MAWI_NOTICE to run");
    }
    TempDir dir;
    const auto t0 = Clock::now();
    const int code = run_cli({"evaluate", "--flows", flows, "--anomalous", anomalous, "--notice", notice,
                              "--thresholds", "50,100,200", "--workers",
                              std::to_string(std::max(1U, std::thread::hardware_concurrency())), "-o",
                              (dir / "report.csv").string()});
    const double wall = seconds_since(t0);
    if (code != 0) {
        return fail(fmt("evaluate exited %d", code));
    }
    const auto trace = read_flow_file(flows);
    Timestamp lo = trace.front().first_seen;
    Timestamp hi = trace.front().last_seen;
    for (const auto& f : trace) {
        lo = std::min(lo, f.first_seen);
        hi = std::max(hi, f.last_seen);
    }
    const double duration = std::chrono::duration<double>(hi - lo).count();
    const auto report = scandet::testing::slurp(dir / "report.csv");
    const bool layout = report.find(std::string(kReportHeader)) != std::string::npos
                        && report.find("# aggregate case=3 metric=precision") != std::string::npos;
    const auto detail = fmt("report %s; wall %.1f s vs trace %.1f s", layout ? "complete" : "INCOMPLETE", wall, duration);
    return layout && wall < duration ? pass(detail) : fail(detail);
}

}// namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"1 oracle-equivalence", oracle_equivalence},
        {"2 planted-scan-recovery", planted_recovery},
        {"3 threshold-monotonicity", threshold_monotonicity},
        {"4 case3-improvement", case_three_improvement},
        {"5 confusion-pr-correctness", confusion_correctness},
        {"6 parallel-determinism-and-speedup", parallel_determinism},
        {"7 streaming-batch-equivalence", streaming_equivalence},
        {"8 ground-truth-golden", ground_truth_golden},
        {"9 mawi-integration", mawi_integration},
    };
    int failures = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = fail(std::string("exception: ") + e.what());
        }
        const char* tag = o.status == Outcome::Status::Pass ? "PASS" : o.status == Outcome::Status::Fail ? "FAIL" : "SKIP";
        failures += o.status == Outcome::Status::Fail ? 1 : 0;
        std::cout << "[" << tag << "] " << name << ": " << o.detail << std::endl;
    }
    std::cout << (failures == 0 ? "acceptance: all criteria met" : "acceptance: " + std::to_string(failures) + " criterion failed")
              << std::endl;
    return failures == 0 ? 0 : 1;
}
