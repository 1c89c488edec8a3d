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

#include <scandet/cli/synth.hpp>
#include <scandet/errors.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <tuple>

namespace scandet::cli {

namespace {

using json = nlohmann::json;

IpAddress offset(const IpAddress& base, std::uint64_t n) {
    if (!base.is_v4()) {
        throw ConfigError("synth", "only IPv4 networks are supported");
    }
    return IpAddress::v4(static_cast<std::uint32_t>(base.v4_value() + n));
}

template<typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key, e.what());
    }
}

IpAddress ip_or(const json& j, const char* key, IpAddress fallback, const std::string& where) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto text = get_or<std::string>(j, key, "", where);
    auto ip = IpAddress::parse(text);
    if (!ip || !ip->is_v4()) {
        throw ConfigError(where + "." + key, "expected an IPv4 address, got '" + text + "'");
    }
    return *ip;
}

Category category_or(const json& j, Category fallback, const std::string& where) {
    if (!j.contains("category")) {
        return fallback;
    }
    const auto text = get_or<std::string>(j, "category", "", where);
    auto c = parse_category(text);
    if (!c) {
        throw ConfigError(where + ".category", "unknown category '" + text + "'");
    }
    return *c;
}

struct Generator {
    const SynthSpec& spec;
    std::mt19937_64 rng;
    std::vector<FlowRecord> flows;

    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
    }

    Timestamp slice_start(std::uint64_t k) const { return spec.trace_start + spec.slice_duration * static_cast<Micros::rep>(k); }

    // A time inside slice k leaving `margin` before its end.
    Timestamp time_in(std::uint64_t k, Micros margin) {
        const auto width = std::max<Micros::rep>(1, (spec.slice_duration - margin).count());
        return slice_start(k) + Micros{static_cast<Micros::rep>(uniform(0, static_cast<std::uint64_t>(width - 1)))};
    }

    void emit(const IpAddress& src, const IpAddress& dst, std::uint16_t sport, std::uint16_t dport, Timestamp t,
              Micros duration, std::uint64_t packets) {
        const std::uint64_t bytes = packets * uniform(40, 1500);
        flows.push_back(FlowRecord{src, dst, sport, dport, Protocol::tcp(), t, t + duration, packets, bytes});
    }

    std::uint16_t ephemeral() { return static_cast<std::uint16_t>(uniform(1024, 65535)); }
};

}// namespace

SynthSpec SynthSpec::from_json(const json& j) {
    if (!j.is_object()) {
        throw ConfigError("synth", "spec must be a JSON object");
    }
    SynthSpec spec;
    spec.trace_start = from_epoch_us(get_or<std::int64_t>(j, "trace_start_us", to_epoch_us(spec.trace_start), "synth"));
    spec.slices = get_or<std::uint64_t>(j, "slices", spec.slices, "synth");
    const double slice_seconds = get_or<double>(j, "slice_seconds", 30.0, "synth");
    if (!(slice_seconds > 0.0)) {
        throw ConfigError("synth.slice_seconds", "must be > 0");
    }
    spec.slice_duration = Micros{static_cast<Micros::rep>(slice_seconds * 1e6)};
    if (spec.slices == 0) {
        throw ConfigError("synth.slices", "must be >= 1");
    }

    if (j.contains("background")) {
        const auto& b = j.at("background");
        spec.background.hosts = get_or<std::uint32_t>(b, "hosts", spec.background.hosts, "synth.background");
        spec.background.network = ip_or(b, "network", spec.background.network, "synth.background");
        spec.background.sessions_per_slice =
            get_or<std::uint32_t>(b, "sessions_per_slice", spec.background.sessions_per_slice, "synth.background");
        spec.background.ports = get_or<std::vector<std::uint16_t>>(b, "ports", spec.background.ports, "synth.background");
        if (spec.background.hosts == 1) {
            throw ConfigError("synth.background.hosts", "need 0 or at least 2 hosts");
        }
        if (spec.background.ports.empty()) {
            throw ConfigError("synth.background.ports", "must not be empty");
        }
    }

    if (j.contains("scanners")) {
        if (!j.at("scanners").is_array()) {
            throw ConfigError("synth.scanners", "must be an array");
        }
        std::size_t i = 0;
        for (const auto& s : j.at("scanners")) {
            const std::string where = "synth.scanners[" + std::to_string(i++) + "]";
            ScannerSpec scanner;
            const auto kind = get_or<std::string>(s, "kind", "netscan", where);
            if (kind == "netscan") {
                scanner.kind = ScannerKind::NetScan;
            } else if (kind == "portscan") {
                scanner.kind = ScannerKind::PortScan;
            } else {
                throw ConfigError(where + ".kind", "expected 'netscan' or 'portscan'");
            }
            scanner.count = get_or<std::uint32_t>(s, "count", scanner.count, where);
            scanner.flows_per_slice = get_or<std::uint32_t>(s, "flows_per_slice", scanner.flows_per_slice, where);
            scanner.slices = get_or<std::vector<std::uint64_t>>(s, "slices", {}, where);
            scanner.target_network = ip_or(s, "target_network", scanner.target_network, where);
            scanner.ports = get_or<std::vector<std::uint16_t>>(s, "ports", scanner.ports, where);
            scanner.label = get_or<std::string>(
                s, "label", scanner.kind == ScannerKind::NetScan ? "ntscSYN" : "ptscSYN", where);
            scanner.category = category_or(s, Category::Anomalous, where);
            scanner.in_ground_truth = get_or<bool>(s, "in_ground_truth", true, where);
            if (scanner.kind == ScannerKind::NetScan && scanner.ports.empty()) {
                throw ConfigError(where + ".ports", "must not be empty");
            }
            if (scanner.kind == ScannerKind::PortScan && scanner.flows_per_slice > 65535) {
                throw ConfigError(where + ".flows_per_slice", "a port scan can probe at most 65535 ports");
            }
            for (auto k : scanner.slices) {
                if (k >= spec.slices) {
                    throw ConfigError(where + ".slices", "slice " + std::to_string(k) + " beyond the trace");
                }
            }
            spec.scanners.push_back(std::move(scanner));
        }
    }

    if (j.contains("decoys")) {
        std::size_t i = 0;
        for (const auto& d : j.at("decoys")) {
            const std::string where = "synth.decoys[" + std::to_string(i++) + "]";
            DecoySpec decoy;
            decoy.label = get_or<std::string>(d, "label", decoy.label, where);
            decoy.category = category_or(d, decoy.category, where);
            decoy.count = get_or<std::uint32_t>(d, "count", decoy.count, where);
            spec.decoys.push_back(std::move(decoy));
        }
        if (!spec.decoys.empty() && spec.background.hosts == 0) {
            throw ConfigError("synth.decoys", "decoys need background hosts");
        }
    }
    return spec;
}

SynthTrace synthesize(const SynthSpec& spec, std::uint64_t seed) {
    Generator gen{spec, std::mt19937_64(seed), {}};
    SynthTrace trace;

    const auto& bg = spec.background;
    for (std::uint32_t i = 0; i < bg.hosts; ++i) {
        trace.background_hosts.push_back(offset(bg.network, i + 1));
    }

    // background: request/reply pairs kept inside one slice
    const Micros reply_margin = std::min(spec.slice_duration / 2, Micros{std::chrono::milliseconds{100}});
    for (std::uint64_t k = 0; k < spec.slices && bg.hosts >= 2; ++k) {
        for (std::uint32_t h = 0; h < bg.hosts; ++h) {
            for (std::uint32_t s = 0; s < bg.sessions_per_slice; ++s) {
                auto peer = static_cast<std::uint32_t>(gen.uniform(0, bg.hosts - 2));
                if (peer >= h) {
                    ++peer;
                }
                const auto& client = trace.background_hosts[h];
                const auto& server = trace.background_hosts[peer];
                const auto port = bg.ports[gen.uniform(0, bg.ports.size() - 1)];
                const auto sport = gen.ephemeral();
                const auto t = gen.time_in(k, reply_margin);
                const auto rtt = Micros{static_cast<Micros::rep>(gen.uniform(1, std::max<std::uint64_t>(1, static_cast<std::uint64_t>(reply_margin.count() / 2))))};
                gen.emit(client, server, sport, port, t, rtt, gen.uniform(1, 10));
                gen.emit(server, client, port, sport, t + rtt, rtt, gen.uniform(1, 10));
            }
        }
    }

    // scanners: one-way probes, nothing comes back
    std::uint64_t global = 0;
    const IpAddress scanner_base = IpAddress::v4(0xC6120000);// 198.18.0.0
    for (const auto& s : spec.scanners) {
        std::vector<std::uint64_t> slices = s.slices;
        if (slices.empty()) {
            slices.resize(spec.slices);
            std::iota(slices.begin(), slices.end(), 0);
        }
        for (std::uint32_t c = 0; c < s.count; ++c, ++global) {
            const IpAddress scanner = offset(scanner_base, global + 1);
            const IpAddress target_net = offset(s.target_network, 256 * global);
            const IpAddress victim = offset(target_net, 1);
            trace.scanners.push_back(scanner);

            for (auto k : slices) {
                if (s.kind == ScannerKind::NetScan) {
                    std::vector<std::uint32_t> hosts(254);
                    std::iota(hosts.begin(), hosts.end(), 1);
                    std::shuffle(hosts.begin(), hosts.end(), gen.rng);
                    for (std::uint32_t f = 0; f < s.flows_per_slice; ++f) {
                        const auto dst = offset(target_net, hosts[f % hosts.size()]);
                        const auto port = s.ports[gen.uniform(0, s.ports.size() - 1)];
                        gen.emit(scanner, dst, gen.ephemeral(), port, gen.time_in(k, Micros{0}), Micros{0}, 1);
                    }
                } else {
                    std::vector<std::uint16_t> ports(65535);
                    std::iota(ports.begin(), ports.end(), std::uint16_t{1});
                    for (std::uint32_t f = 0; f < s.flows_per_slice; ++f) {
                        std::swap(ports[f], ports[gen.uniform(f, ports.size() - 1)]);
                        gen.emit(scanner, victim, gen.ephemeral(), ports[f], gen.time_in(k, Micros{0}), Micros{0}, 1);
                    }
                }
            }

            if (!s.in_ground_truth) {
                continue;
            }
            GroundTruthEntry entry;
            entry.category = s.category;
            entry.taxonomy_label = s.label;
            entry.src_ips = {scanner};
            if (s.kind == ScannerKind::PortScan) {
                entry.dst_ips = {victim};
            }
            const bool notice = s.category == Category::Notice || s.category == Category::Benign;
            entry.source_file = notice ? SourceFile::NoticeFile : SourceFile::AnomalousFile;
            (notice ? trace.notice : trace.anomalous).push_back(std::move(entry));
        }
    }

    for (const auto& d : spec.decoys) {
        for (std::uint32_t c = 0; c < d.count; ++c) {
            GroundTruthEntry entry;
            entry.category = d.category;
            entry.taxonomy_label = d.label;
            entry.src_ips = {trace.background_hosts[gen.uniform(0, bg.hosts - 1)]};
            const bool notice = d.category == Category::Notice || d.category == Category::Benign;
            entry.source_file = notice ? SourceFile::NoticeFile : SourceFile::AnomalousFile;
            (notice ? trace.notice : trace.anomalous).push_back(std::move(entry));
        }
    }

    trace.flows = std::move(gen.flows);
    std::sort(trace.flows.begin(), trace.flows.end(), [](const FlowRecord& a, const FlowRecord& b) {
        return std::tie(a.first_seen, a.src, a.dst, a.src_port, a.dst_port, a.last_seen)
            < std::tie(b.first_seen, b.src, b.dst, b.src_port, b.dst_port, b.last_seen);
    });
    return trace;
}

}// namespace scandet::cli
