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

#include <scandet/eval.hpp>

#include <charconv>
#include <cmath>
#include <fnmatch.h>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

namespace scandet {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool glob_match(const std::string& pattern, std::string_view label) {
    const std::string subject(label);
    return fnmatch(pattern.c_str(), subject.c_str(), FNM_CASEFOLD) == 0;
}

std::optional<SourceFile> file_of(TruthScope scope) {
    switch (scope) {
        case TruthScope::Anomalous: return SourceFile::AnomalousFile;
        case TruthScope::Notice: return SourceFile::NoticeFile;
        case TruthScope::Total: return std::nullopt;
    }
    return std::nullopt;
}

template<typename T>
std::set<T> difference(const std::set<T>& a, const std::set<T>& b) {
    std::set<T> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

CaseResult evaluate_undirected(EvalCase which, std::span<const RatioVerdict> verdicts, const GroundTruthSet& truth_gt,
                               std::span<const FlowRecord> flows, const TraceUniverse& universe,
                               const EvalOptions& options) {
    const auto detected = flagged_ips(verdicts);
    std::set<IpAddress> truth;
    for (const auto& ip : truth_gt.ip_set(file_of(options.scope))) {
        if (universe.ips.contains(ip)) {
            truth.insert(ip);
        }
    }

    CaseResult result;
    result.matrix = confusion(detected, truth, universe.ips);
    if (which == EvalCase::FilteredPlusRules) {
        const auto confirmed = reintegrate(difference(detected, truth), flows, options.rules, options.slice);
        result.reintegrated = confirmed.size();
        result.matrix.tp += confirmed.size();
        result.matrix.fp -= confirmed.size();
    }
    result.score = precision_recall(result.matrix);
    return result;
}

CaseResult evaluate_directional(EvalCase which, std::span<const RatioVerdict> verdicts,
                                const GroundTruthSet& truth_gt, std::span<const FlowRecord> flows,
                                const TraceUniverse& universe, const EvalOptions& options) {
    const auto file = file_of(options.scope);
    std::set<DirectedIp> directed_universe;
    for (const auto& ip : universe.sources) {
        directed_universe.emplace(ip, Direction::ScanSender);
    }
    for (const auto& ip : universe.destinations) {
        directed_universe.emplace(ip, Direction::ScanReceiver);
    }
    std::set<DirectedIp> truth;
    for (const auto& ip : truth_gt.src_ip_set(file)) {
        truth.emplace(ip, Direction::ScanSender);
    }
    for (const auto& ip : truth_gt.dst_ip_set(file)) {
        truth.emplace(ip, Direction::ScanReceiver);
    }
    std::erase_if(truth, [&](const DirectedIp& d) { return !directed_universe.contains(d); });

    const auto detected = anomalous_ips(verdicts);
    CaseResult result;
    result.matrix = confusion(detected, truth, directed_universe);
    if (which == EvalCase::FilteredPlusRules) {
        // The rules inspect outbound traffic, so only sender FPs can be confirmed.
        std::set<IpAddress> sender_fps;
        for (const auto& [ip, dir] : difference(detected, truth)) {
            if (dir == Direction::ScanSender) {
                sender_fps.insert(ip);
            }
        }
        const auto confirmed = reintegrate(sender_fps, flows, options.rules, options.slice);
        result.reintegrated = confirmed.size();
        result.matrix.tp += confirmed.size();
        result.matrix.fp -= confirmed.size();
    }
    result.score = precision_recall(result.matrix);
    return result;
}

}// namespace

LabelWhitelist LabelWhitelist::defaults() { return LabelWhitelist{{"*ntsc*", "*ptsc*", "*scan*"}, {"*icmp*"}}; }

LabelWhitelist LabelWhitelist::parse(std::string_view text) {
    LabelWhitelist out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find_first_of(",\n", pos);
        auto token = trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
        if (!token.empty() && token.front() != '#') {
            if (token.front() == '!') {
                token = trim(token.substr(1));
                if (!token.empty()) {
                    out.exclude.emplace_back(token);
                }
            } else {
                out.include.emplace_back(token);
            }
        }
        if (end == std::string_view::npos) {
            break;
        }
        pos = end + 1;
    }
    return out;
}

LabelWhitelist LabelWhitelist::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open label whitelist '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

bool LabelWhitelist::matches(std::string_view label) const {
    const bool included = std::any_of(include.begin(), include.end(), [&](const auto& p) { return glob_match(p, label); });
    if (!included) {
        return false;
    }
    return std::none_of(exclude.begin(), exclude.end(), [&](const auto& p) { return glob_match(p, label); });
}

std::string LabelWhitelist::to_string() const {
    std::string out;
    for (const auto& p : include) {
        out += out.empty() ? "" : ",";
        out += p;
    }
    for (const auto& p : exclude) {
        out += out.empty() ? "!" : ",!";
        out += p;
    }
    return out;
}

GroundTruthSet filter_scan_labels(const GroundTruthSet& gt, const LabelWhitelist& whitelist) {
    GroundTruthSet out;
    for (const auto& entry : gt.entries) {
        if (entry.category != Category::Benign && whitelist.matches(entry.taxonomy_label)) {
            out.entries.push_back(entry);
        }
    }
    return out;
}

PRScore precision_recall(const ConfusionMatrix& m) {
    PRScore s;
    if (m.tp + m.fn > 0) {
        s.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
    }
    if (m.tp + m.fp > 0) {
        s.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
    }
    return s;
}

AggregateScore aggregate_metric(std::span<const std::optional<double>> scores) {
    AggregateScore agg;
    double sum = 0.0;
    for (const auto& s : scores) {
        if (s) {
            sum += *s;
            ++agg.n_traces;
        } else {
            ++agg.excluded;
        }
    }
    if (agg.n_traces == 0) {
        throw Error("cannot aggregate: no defined score among " + std::to_string(scores.size()));
    }
    agg.mean = sum / static_cast<double>(agg.n_traces);
    double sq = 0.0;
    for (const auto& s : scores) {
        if (s) {
            sq += (*s - agg.mean) * (*s - agg.mean);
        }
    }
    agg.variance = sq / static_cast<double>(agg.n_traces);
    return agg;
}

std::pair<AggregateScore, AggregateScore> aggregate(std::span<const PRScore> scores) {
    std::vector<std::optional<double>> recall;
    std::vector<std::optional<double>> precision;
    for (const auto& s : scores) {
        recall.push_back(s.recall);
        precision.push_back(s.precision);
    }
    return {aggregate_metric(recall), aggregate_metric(precision)};
}

std::string_view to_string(TruthScope scope) {
    switch (scope) {
        case TruthScope::Anomalous: return "anomalous";
        case TruthScope::Notice: return "notice";
        case TruthScope::Total: return "total";
    }
    return "total";
}

std::optional<TruthScope> parse_truth_scope(std::string_view text) {
    if (text == "anomalous") {
        return TruthScope::Anomalous;
    }
    if (text == "notice") {
        return TruthScope::Notice;
    }
    if (text == "total") {
        return TruthScope::Total;
    }
    return std::nullopt;
}

TraceUniverse TraceUniverse::of(std::span<const FlowRecord> flows) {
    TraceUniverse u;
    for (const auto& f : flows) {
        u.sources.insert(f.src);
        u.destinations.insert(f.dst);
    }
    u.ips = u.sources;
    u.ips.insert(u.destinations.begin(), u.destinations.end());
    return u;
}

CaseResult evaluate_case(EvalCase which, std::span<const RatioVerdict> verdicts, const GroundTruthSet& gt,
                         std::span<const FlowRecord> flows, const TraceUniverse& universe, const EvalOptions& options) {
    const GroundTruthSet truth_gt = which == EvalCase::RawMawilab ? gt : filter_scan_labels(gt, options.whitelist);
    if (options.directional) {
        return evaluate_directional(which, verdicts, truth_gt, flows, universe, options);
    }
    return evaluate_undirected(which, verdicts, truth_gt, flows, universe, options);
}

CaseResult evaluate_case(EvalCase which, std::span<const RatioVerdict> verdicts, const GroundTruthSet& gt,
                         std::span<const FlowRecord> flows, const EvalOptions& options) {
    return evaluate_case(which, verdicts, gt, flows, TraceUniverse::of(flows), options);
}

std::string format_number(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string format_score(const std::optional<double>& score) {
    if (!score) {
        return "undefined";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", *score);
    return buf;
}

void write_report(std::ostream& out, std::span<const ReportRow> rows) {
    out << kReportHeader << '\n';
    for (const auto& r : rows) {
        const auto& m = r.result.matrix;
        out << r.trace_id << ',' << static_cast<int>(r.which) << ',' << format_number(r.threshold) << ','
            << to_string(r.scope) << ',' << m.tp << ',' << m.fp << ',' << m.fn << ',' << m.tn << ','
            << format_score(r.result.score.recall) << ',' << format_score(r.result.score.precision) << ','
            << r.result.reintegrated << '\n';
    }

    // (case, threshold, scope) -> scores across traces
    using GroupKey = std::tuple<int, double, int>;
    std::map<GroupKey, std::vector<PRScore>> groups;
    std::set<int> cases;
    for (const auto& r : rows) {
        groups[{static_cast<int>(r.which), r.threshold, static_cast<int>(r.scope)}].push_back(r.result.score);
        cases.insert(static_cast<int>(r.which));
    }

    auto cell = [](std::span<const std::optional<double>> scores) -> std::string {
        if (std::none_of(scores.begin(), scores.end(), [](const auto& s) { return s.has_value(); })) {
            return "undefined";
        }
        const auto agg = aggregate_metric(scores);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f+-%.3f", agg.mean, agg.variance);
        std::string text = buf;
        if (agg.excluded > 0) {
            text += " [" + std::to_string(agg.excluded) + " undefined]";
        }
        return text;
    };

    for (int c : cases) {
        std::set<double> thresholds;
        for (const auto& [key, scores] : groups) {
            if (std::get<0>(key) == c) {
                thresholds.insert(std::get<1>(key));
            }
        }
        for (const bool recall : {true, false}) {
            out << "\n# aggregate case=" << c << " metric=" << (recall ? "recall" : "precision") << '\n';
            out << "threshold,anomalous,notice,total\n";
            for (double t : thresholds) {
                out << format_number(t);
                for (auto scope : {TruthScope::Anomalous, TruthScope::Notice, TruthScope::Total}) {
                    auto it = groups.find({c, t, static_cast<int>(scope)});
                    if (it == groups.end()) {
                        out << ",n/a";
                        continue;
                    }
                    std::vector<std::optional<double>> metric;
                    for (const auto& s : it->second) {
                        metric.push_back(recall ? s.recall : s.precision);
                    }
                    out << ',' << cell(metric);
                }
                out << '\n';
            }
        }
    }
}

}// namespace scandet
