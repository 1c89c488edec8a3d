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

#include <scandet/cli/commands.hpp>
#include <scandet/cli/config.hpp>
#include <scandet/cli/manifest.hpp>
#include <scandet/cli/synth.hpp>
#include <scandet/errors.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace scandet::cli {

namespace {

namespace fs = std::filesystem;

/// Flags shared by every subcommand; each overrides the config file.
struct CommonFlags {
    std::string config_path;
    std::optional<double> threshold;
    std::optional<double> slice_seconds;
    std::optional<std::string> mode;
    std::optional<std::string> partitioning;
    bool strict = false;

    void attach(CLI::App& app, bool with_threshold = true) {
        app.add_option("--config", config_path, "INI config file (default: $SCANDET_CONFIG)");
        if (with_threshold) {
            app.add_option("--threshold", threshold, "Ratio threshold");
        }
        app.add_option("--slice-seconds", slice_seconds, "Slice duration in seconds");
        app.add_option("--mode", mode, "batch|stream");
        app.add_option("--partitioning", partitioning, "slice|ip");
        app.add_flag("--strict", strict, "Abort on the first malformed input record");
    }
};

AppConfig resolve_config(const CommonFlags& flags, std::optional<unsigned> workers) {
    AppConfig cfg;
    std::string path = flags.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') {
            path = env;
        }
    }
    if (!path.empty()) {
        apply_config_file(cfg, path);
    }
    if (flags.threshold) {
        cfg.detector.threshold = *flags.threshold;
    }
    if (flags.slice_seconds) {
        if (!(*flags.slice_seconds > 0.0)) {
            throw ConfigError("slice.seconds", "slice duration must be > 0");
        }
        cfg.detector.slice.slice_duration = Micros{static_cast<Micros::rep>(*flags.slice_seconds * 1e6)};
    }
    if (flags.mode) {
        if (*flags.mode == "batch") {
            cfg.engine.mode = ExecutionMode::Batch;
        } else if (*flags.mode == "stream") {
            cfg.engine.mode = ExecutionMode::Streaming;
        } else {
            throw ConfigError("engine.mode", "expected 'batch' or 'stream'");
        }
    }
    if (flags.partitioning) {
        if (*flags.partitioning == "slice") {
            cfg.engine.partitioning = Partitioning::BySliceIndex;
        } else if (*flags.partitioning == "ip") {
            cfg.engine.partitioning = Partitioning::ByIpHash;
        } else {
            throw ConfigError("engine.partitioning", "expected 'slice' or 'ip'");
        }
    }
    if (workers) {
        cfg.engine.workers = *workers;
    }
    if (flags.strict) {
        cfg.flow_file.strict = true;
        cfg.ground_truth.strict = true;
    }
    cfg.validate();
    return cfg;
}

SliceConfig slice_for(const AppConfig& cfg, std::span<const FlowRecord> flows) {
    SliceConfig slice = slice_config_for(flows, cfg.detector.slice.slice_duration);
    if (cfg.trace_start) {
        slice.trace_start = *cfg.trace_start;
    }
    return slice;
}

/// Writes through a temporary file so a failed run leaves no partial output.
class AtomicOutput {
  public:
    explicit AtomicOutput(fs::path target) : target_(std::move(target)), tmp_(target_) {
        tmp_ += ".tmp";
        out_.open(tmp_, std::ios::binary);
        if (!out_) {
            throw IoError("cannot write '" + target_.string() + "'");
        }
    }
    ~AtomicOutput() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }
    AtomicOutput(const AtomicOutput&) = delete;
    AtomicOutput& operator=(const AtomicOutput&) = delete;

    std::ostream& stream() { return out_; }

    void commit() {
        out_.flush();
        if (!out_) {
            throw IoError("write failed for '" + target_.string() + "'");
        }
        out_.close();
        fs::rename(tmp_, target_);
        committed_ = true;
    }

  private:
    fs::path target_;
    fs::path tmp_;
    std::ofstream out_;
    bool committed_ = false;
};

std::vector<unsigned> parse_worker_list(const std::string& text) {
    std::vector<unsigned> out;
    for (double v : parse_threshold_list(text, "engine.workers")) {
        if (v < 1 || v != static_cast<unsigned>(v)) {
            throw ConfigError("engine.workers", "worker counts must be positive integers");
        }
        out.push_back(static_cast<unsigned>(v));
    }
    return out;
}

std::string join_labels(const std::vector<ScanLabel>& labels) {
    std::string out;
    for (const auto& l : labels) {
        if (!out.empty()) {
            out += ';';
        }
        out += to_string(l.kind);
    }
    return out;
}

// ---------------------------------------------------------------------------

struct DetectArgs {
    CommonFlags common;
    std::string flow_file;
    std::string out_path;
    std::optional<unsigned> workers;
};

int cmd_detect(const DetectArgs& args, std::ostream& out) {
    RunManifest manifest;
    manifest.command = "detect";
    manifest.started_at = utc_now();

    auto cfg = resolve_config(args.common, args.workers);

    std::vector<FlowRecord> flows;
    std::vector<RatioVerdict> verdicts;
    SliceConfig slice;
    if (cfg.engine.mode == ExecutionMode::Batch) {
        flows = read_flow_file(args.flow_file, cfg.flow_file);
        slice = slice_for(cfg, flows);
        DetectorConfig detector = cfg.detector;
        detector.slice = slice;
        verdicts = run_batch(flows, detector, cfg.engine).verdicts;
    } else {
        FlowReader reader(args.flow_file, cfg.flow_file);
        std::optional<FlowRecord> first = reader.next();
        slice.slice_duration = cfg.detector.slice.slice_duration;
        slice.trace_start = cfg.trace_start ? *cfg.trace_start : (first ? first->first_seen : Timestamp{});
        DetectorConfig detector = cfg.detector;
        detector.slice = slice;
        FlowSource source = [&]() -> std::optional<FlowRecord> {
            auto next = first ? std::exchange(first, std::nullopt) : reader.next();
            if (next) {
                flows.push_back(*next);
            }
            return next;
        };
        auto stats = run_streaming(source, detector, cfg.engine, [&](std::uint64_t, std::span<const RatioVerdict> v) {
            verdicts.insert(verdicts.end(), v.begin(), v.end());
        });
        if (stats.late_dropped > 0) {
            out << "late flows dropped: " << stats.late_dropped << '\n';
        }
        // classification below needs a slice config every flow satisfies
        slice.trace_start = std::min(slice.trace_start, slice_config_for(flows, slice.slice_duration).trace_start);
    }

    const auto ips = flagged_ips(verdicts);
    RuleEvaluator rules(flows, ips, cfg.rules, slice);
    std::map<IpAddress, std::string> labels;
    for (const auto& ip : ips) {
        labels[ip] = join_labels(rules.classify(ip));
    }

    const fs::path target(args.out_path);
    AtomicOutput file(target);
    auto& os = file.stream();
    os << manifest_reference(target) << '\n';
    os << "slice_index,ip,direction,generated,received,ratio,labels\n";
    for (const auto& v : verdicts) {
        os << v.key.slice_index << ',' << v.key.ip.to_string() << ',' << to_string(v.direction) << ','
           << v.generated << ',' << v.received << ',' << format_number(v.ratio) << ',' << labels[v.key.ip] << '\n';
    }
    file.commit();

    manifest.config = cfg.to_json();
    manifest.config["slice"]["trace_start_us"] = to_epoch_us(slice.trace_start);
    manifest.add_input(args.flow_file);
    manifest.outputs = {target.string()};
    manifest.finished_at = utc_now();
    write_manifest(manifest_path_for(target), manifest);

    out << verdicts.size() << " verdicts, " << ips.size() << " anomalous IPs\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    CommonFlags common;
    std::vector<std::string> flow_files;
    std::vector<std::string> anomalous;
    std::vector<std::string> notice;
    std::vector<std::string> trace_ids;
    std::string cases = "all";
    std::optional<std::string> thresholds;
    std::string truth = "all";
    bool directional = false;
    std::optional<unsigned> workers;
    std::string out_path;
};

std::vector<EvalCase> parse_cases(const std::string& text) {
    if (text == "all") {
        return {EvalCase::RawMawilab, EvalCase::FilteredMawilab, EvalCase::FilteredPlusRules};
    }
    std::vector<EvalCase> out;
    for (double v : parse_threshold_list(text, "case")) {
        if (v == 1) {
            out.push_back(EvalCase::RawMawilab);
        } else if (v == 2) {
            out.push_back(EvalCase::FilteredMawilab);
        } else if (v == 3) {
            out.push_back(EvalCase::FilteredPlusRules);
        } else {
            throw ConfigError("case", "expected 1, 2, 3 or all");
        }
    }
    return out;
}

std::vector<TruthScope> parse_scopes(const std::string& text) {
    if (text == "all") {
        return {TruthScope::Anomalous, TruthScope::Notice, TruthScope::Total};
    }
    auto scope = parse_truth_scope(text);
    if (!scope) {
        throw ConfigError("truth", "expected anomalous, notice, total or all");
    }
    return {*scope};
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.started_at = utc_now();

    auto cfg = resolve_config(args.common, args.workers);
    if (args.directional) {
        cfg.directional = true;
    }
    cfg.engine.mode = ExecutionMode::Batch;
    const auto cases = parse_cases(args.cases);
    const auto scopes = parse_scopes(args.truth);
    const auto thresholds =
        args.thresholds ? parse_threshold_list(*args.thresholds, "thresholds") : std::vector<double>{cfg.detector.threshold};
    for (double t : thresholds) {
        DetectorConfig probe = cfg.detector;
        probe.threshold = t;
        probe.validate();
    }

    const auto n = args.flow_files.size();
    auto check_count = [n](const std::vector<std::string>& v, const char* what) {
        if (!v.empty() && v.size() != n) {
            throw ConfigError(what, "expected one value per --flows file");
        }
    };
    check_count(args.anomalous, "anomalous");
    check_count(args.notice, "notice");
    check_count(args.trace_ids, "trace-id");

    std::vector<ReportRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const fs::path flow_path(args.flow_files[i]);
        const std::string trace_id = args.trace_ids.empty() ? flow_path.stem().string() : args.trace_ids[i];
        const auto flows = read_flow_file(flow_path, cfg.flow_file);
        manifest.add_input(flow_path);

        std::optional<fs::path> anomalous_path;
        std::optional<fs::path> notice_path;
        if (!args.anomalous.empty()) {
            anomalous_path = args.anomalous[i];
            manifest.add_input(*anomalous_path);
        }
        if (!args.notice.empty()) {
            notice_path = args.notice[i];
            manifest.add_input(*notice_path);
        }
        std::vector<std::string> warnings;
        const auto gt = read_ground_truth(anomalous_path, notice_path, cfg.ground_truth, &warnings);
        for (const auto& w : warnings) {
            err << "scandet: warning trace=" << trace_id << " " << w << '\n';
        }

        EvalOptions options;
        options.directional = cfg.directional;
        options.whitelist = cfg.whitelist;
        options.rules = cfg.rules;
        options.slice = slice_for(cfg, flows);
        if (flows.empty()) {
            throw ParseError("trace '" + trace_id + "' has no flows to evaluate");
        }

        const auto joined = joined_counts(flows, options.slice, cfg.engine);
        const auto universe = TraceUniverse::of(flows);
        for (double t : thresholds) {
            const auto verdicts = apply_threshold(joined, t);
            for (auto which : cases) {
                for (auto scope : scopes) {
                    options.scope = scope;
                    rows.push_back(ReportRow{trace_id, which, t, scope,
                                             evaluate_case(which, verdicts, gt, flows, universe, options)});
                }
            }
        }
    }

    auto emit = [&](std::ostream& os) { write_report(os, rows); };
    if (args.out_path.empty()) {
        emit(out);
        return kExitOk;
    }
    const fs::path target(args.out_path);
    AtomicOutput file(target);
    file.stream() << manifest_reference(target) << '\n';
    emit(file.stream());
    file.commit();

    manifest.config = cfg.to_json();
    manifest.config["evaluate"] = {{"cases", args.cases}, {"truth", args.truth}, {"thresholds", thresholds}};
    manifest.outputs = {target.string()};
    manifest.finished_at = utc_now();
    write_manifest(manifest_path_for(target), manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
    CommonFlags common;
    std::string flow_file;
    std::string workers = "1";
    unsigned repetitions = 5;
    std::string out_path;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
    auto cfg = resolve_config(args.common, std::nullopt);
    if (args.repetitions < 1) {
        throw ConfigError("reps", "must be >= 1");
    }
    const auto sweep = parse_worker_list(args.workers);
    const auto flows = read_flow_file(args.flow_file, cfg.flow_file);
    DetectorConfig detector = cfg.detector;
    detector.slice = slice_for(cfg, flows);

    std::ostringstream runs;
    std::ostringstream summary;
    runs << "workers,rep,wall_s,trace_s,time_ratio,records_in,verdicts_out\n";
    summary << "workers,min,q1,median,q3,max\n";
    for (unsigned w : sweep) {
        EngineConfig engine = cfg.engine;
        engine.mode = ExecutionMode::Batch;
        engine.workers = w;
        std::vector<double> ratios;
        for (unsigned rep = 1; rep <= args.repetitions; ++rep) {
            const auto stats = run_batch(flows, detector, engine).stats;
            const double ratio = stats.time_ratio.value_or(0.0);
            ratios.push_back(ratio);
            runs << w << ',' << rep << ',' << format_number(static_cast<double>(stats.wall_time.count()) / 1e6) << ','
                 << format_number(static_cast<double>(stats.trace_duration.count()) / 1e6) << ','
                 << (stats.time_ratio ? format_number(*stats.time_ratio) : "undefined") << ',' << stats.records_in
                 << ',' << stats.verdicts_out << '\n';
        }
        const auto q = five_number_summary(ratios);
        summary << w;
        for (double v : q) {
            summary << ',' << format_number(v);
        }
        summary << '\n';
    }

    if (args.out_path.empty()) {
        out << runs.str() << '\n' << summary.str();
        return kExitOk;
    }
    const fs::path target(args.out_path);
    AtomicOutput file(target);
    file.stream() << manifest_reference(target) << '\n' << runs.str() << '\n' << summary.str();
    file.commit();

    RunManifest manifest;
    manifest.command = "bench";
    manifest.started_at = utc_now();
    manifest.config = cfg.to_json();
    manifest.config["bench"] = {{"workers", sweep}, {"repetitions", args.repetitions}};
    manifest.add_input(args.flow_file);
    manifest.outputs = {target.string()};
    manifest.finished_at = utc_now();
    write_manifest(manifest_path_for(target), manifest);
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string spec_file;
    std::string out_path;
    std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& args, std::ostream& out) {
    std::ifstream in(args.spec_file);
    if (!in) {
        throw IoError("cannot open synth spec '" + args.spec_file + "'");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("synth", std::string("invalid JSON: ") + e.what());
    }
    const auto spec = SynthSpec::from_json(doc);
    const auto trace = synthesize(spec, args.seed);

    const fs::path target(args.out_path);
    fs::path anomalous = target;
    anomalous += ".anomalous.xml";
    fs::path notice = target;
    notice += ".notice.xml";

    write_flow_file(target, trace.flows);
    for (const auto& [path, entries] : {std::pair{anomalous, &trace.anomalous}, std::pair{notice, &trace.notice}}) {
        std::ofstream xml(path);
        if (!xml) {
            throw IoError("cannot write '" + path.string() + "'");
        }
        write_ground_truth(xml, *entries);
    }

    RunManifest manifest;
    manifest.command = "synth";
    manifest.started_at = utc_now();
    manifest.config = {{"spec", doc}, {"seed", args.seed}};
    manifest.add_input(args.spec_file);
    manifest.outputs = {target.string(), anomalous.string(), notice.string()};
    manifest.finished_at = utc_now();
    write_manifest(manifest_path_for(target), manifest);

    out << trace.flows.size() << " flows, " << trace.scanners.size() << " planted scanners\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

std::string one_line(std::string text) {
    std::replace(text.begin(), text.end(), '\n', ' ');
    std::replace(text.begin(), text.end(), '"', '\'');
    return text;
}

int report_error(std::ostream& err, const char* kind, int code, const std::string& message,
                 const std::string& field = {}) {
    err << "scandet: error kind=" << kind << " exit=" << code;
    if (!field.empty()) {
        err << " field=" << field;
    }
    err << " message=\"" << one_line(message) << "\"\n";
    return code;
}

}// namespace

std::vector<double> five_number_summary(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double h = (static_cast<double>(values.size()) - 1.0) * p;
        const auto lo = static_cast<std::size_t>(h);
        const auto hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    return {values.front(), quantile(0.25), quantile(0.5), quantile(0.75), values.back()};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flow-level port and net scan detector"};
    app.set_version_flag("--version", tool_version());
    app.require_subcommand(1);

    DetectArgs detect;
    auto* detect_cmd = app.add_subcommand("detect", "Flag scanning IPs in a flow file");
    detect_cmd->add_option("flow_file", detect.flow_file, "Flow file")->required();
    detect_cmd->add_option("-o,--out", detect.out_path, "Verdict file")->required();
    detect_cmd->add_option("--workers", detect.workers, "Worker threads");
    detect.common.attach(*detect_cmd);

    EvaluateArgs evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score detections against MAWILab-style ground truth");
    eval_cmd->add_option("--flows", evaluate.flow_files, "Flow file (repeat per trace)")->required();
    eval_cmd->add_option("--anomalous", evaluate.anomalous, "Anomalous XML (repeat per trace)");
    eval_cmd->add_option("--notice", evaluate.notice, "Notice XML (repeat per trace)");
    eval_cmd->add_option("--trace-id", evaluate.trace_ids, "Trace identifier (repeat per trace)");
    eval_cmd->add_option("--case", evaluate.cases, "1, 2, 3, a comma list, or all");
    eval_cmd->add_option("--thresholds", evaluate.thresholds, "Comma separated thresholds, e.g. 50,100,200");
    eval_cmd->add_option("--truth", evaluate.truth, "anomalous, notice, total or all");
    eval_cmd->add_flag("--directional", evaluate.directional, "Match senders to sources and receivers to destinations");
    eval_cmd->add_option("--workers", evaluate.workers, "Worker threads");
    eval_cmd->add_option("-o,--out", evaluate.out_path, "Report file (default: stdout)");
    evaluate.common.attach(*eval_cmd);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Time batch runs over a worker-count sweep");
    bench_cmd->add_option("flow_file", bench.flow_file, "Flow file")->required();
    bench_cmd->add_option("--workers", bench.workers, "Comma separated worker counts, e.g. 1,2,4");
    bench_cmd->add_option("--reps", bench.repetitions, "Repetitions per worker count");
    bench_cmd->add_option("-o,--out", bench.out_path, "Output file (default: stdout)");
    bench.common.attach(*bench_cmd);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a flow file with planted scanners and its ground truth");
    synth_cmd->add_option("spec_file", synth.spec_file, "JSON synth spec")->required();
    synth_cmd->add_option("-o,--out", synth.out_path, "Flow file to write")->required();
    synth_cmd->add_option("--seed", synth.seed, "RNG seed");

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << tool_version() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return report_error(err, "usage", kExitConfig, e.what());
    }

    try {
        if (detect_cmd->parsed()) {
            return cmd_detect(detect, out);
        }
        if (eval_cmd->parsed()) {
            return cmd_evaluate(evaluate, out, err);
        }
        if (bench_cmd->parsed()) {
            return cmd_bench(bench, out);
        }
        if (synth_cmd->parsed()) {
            return cmd_synth(synth, out);
        }
    } catch (const ConfigError& e) {
        return report_error(err, "config", kExitConfig, e.what(), e.field());
    } catch (const GroundTruthError& e) {
        return report_error(err, "ground-truth", kExitGroundTruth, e.what());
    } catch (const IoError& e) {
        return report_error(err, "io", kExitIo, e.what());
    } catch (const ParseError& e) {
        return report_error(err, "parse", kExitIo, e.what());
    } catch (const EngineError& e) {
        return report_error(err, "engine", kExitIo, e.what());
    } catch (const std::exception& e) {
        return report_error(err, "internal", kExitIo, e.what());
    }
    return kExitOk;
}

}// namespace scandet::cli
