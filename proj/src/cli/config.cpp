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

#include <scandet/cli/config.hpp>
#include <scandet/errors.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

namespace scandet::cli {

namespace pt = boost::property_tree;

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "slice.seconds",
        "slice.trace_start_us",
        "detector.threshold",
        "rules.netscan_min_flows",
        "rules.portscan_min_ports",
        "rules.combined_min_flows_per_slice",
        "rules.subnet_prefix_v4",
        "rules.subnet_prefix_v6",
        "rules.known_ports",
        "engine.workers",
        "engine.partitioning",
        "engine.mode",
        "engine.watermark_lag_seconds",
        "eval.whitelist",
        "eval.whitelist_file",
        "eval.directional",
        "ingest.strict",
        "ingest.max_error_ratio",
    };
    return keys;
}

template<typename T>
T number(const std::string& field, const std::string& text) {
    T value{};
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end) {
        throw ConfigError(field, "not a valid number: '" + text + "'");
    }
    return value;
}

double finite_number(const std::string& field, const std::string& text) {
    const auto v = number<double>(field, text);
    if (!std::isfinite(v)) {
        throw ConfigError(field, "must be finite");
    }
    return v;
}

bool boolean(const std::string& field, const std::string& text) {
    if (text == "true" || text == "yes" || text == "1" || text == "on") {
        return true;
    }
    if (text == "false" || text == "no" || text == "0" || text == "off") {
        return false;
    }
    throw ConfigError(field, "expected a boolean, got '" + text + "'");
}

std::uint64_t rule_minimum(const std::string& field, const std::string& text) {
    if (text == "off" || text == "inf") {
        return RuleConfig::kDisabled;
    }
    return number<std::uint64_t>(field, text);
}

Micros seconds(const std::string& field, const std::string& text) {
    const double s = finite_number(field, text);
    return Micros{static_cast<Micros::rep>(std::llround(s * 1e6))};
}

}// namespace

void AppConfig::validate() const {
    detector.validate();
    rules.validate();
    engine.validate();
    if (whitelist.include.empty()) {
        throw ConfigError("eval.whitelist", "no include pattern");
    }
    if (!(flow_file.max_error_ratio >= 0.0)) {
        throw ConfigError("ingest.max_error_ratio", "must be >= 0");
    }
}

nlohmann::json AppConfig::to_json() const {
    nlohmann::json j;
    j["slice"]["seconds"] = static_cast<double>(detector.slice.slice_duration.count()) / 1e6;
    if (trace_start) {
        j["slice"]["trace_start_us"] = to_epoch_us(*trace_start);
    }
    j["detector"]["threshold"] = detector.threshold;
    auto minimum = [](std::uint64_t v) -> nlohmann::json {
        if (v == RuleConfig::kDisabled) {
            return "off";
        }
        return v;
    };
    j["rules"]["netscan_min_flows"] = minimum(rules.netscan_min_flows);
    j["rules"]["portscan_min_ports"] = minimum(rules.portscan_min_ports);
    j["rules"]["combined_min_flows_per_slice"] = minimum(rules.combined_min_flows_per_slice);
    j["rules"]["subnet_prefix_v4"] = rules.subnet_prefix_v4;
    j["rules"]["subnet_prefix_v6"] = rules.subnet_prefix_v6;
    j["rules"]["known_ports"] = rules.known_ports.to_string();
    j["engine"]["workers"] = engine.workers;
    j["engine"]["partitioning"] = std::string(to_string(engine.partitioning));
    j["engine"]["mode"] = std::string(to_string(engine.mode));
    j["engine"]["watermark_lag_seconds"] = static_cast<double>(engine.watermark_lag.count()) / 1e6;
    j["eval"]["whitelist"] = whitelist.to_string();
    j["eval"]["directional"] = directional;
    j["ingest"]["strict"] = flow_file.strict;
    j["ingest"]["max_error_ratio"] = flow_file.max_error_ratio;
    return j;
}

void apply_config_file(AppConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file '" + path.string() + "'");
    }
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config", e.message() + " at line " + std::to_string(e.line()));
    }

    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            if (!body.data().empty()) {
                throw ConfigError(section, "key outside of a section");
            }
            continue;
        }
        for (const auto& [key, node] : body) {
            const std::string field = section + "." + key;
            if (!known_keys().contains(field)) {
                throw ConfigError(field, "unknown configuration key");
            }
            const std::string value = node.data();

            if (field == "slice.seconds") {
                cfg.detector.slice.slice_duration = seconds(field, value);
            } else if (field == "slice.trace_start_us") {
                cfg.trace_start = from_epoch_us(number<std::int64_t>(field, value));
            } else if (field == "detector.threshold") {
                cfg.detector.threshold = finite_number(field, value);
            } else if (field == "rules.netscan_min_flows") {
                cfg.rules.netscan_min_flows = rule_minimum(field, value);
            } else if (field == "rules.portscan_min_ports") {
                cfg.rules.portscan_min_ports = rule_minimum(field, value);
            } else if (field == "rules.combined_min_flows_per_slice") {
                cfg.rules.combined_min_flows_per_slice = rule_minimum(field, value);
            } else if (field == "rules.subnet_prefix_v4") {
                cfg.rules.subnet_prefix_v4 = number<unsigned>(field, value);
            } else if (field == "rules.subnet_prefix_v6") {
                cfg.rules.subnet_prefix_v6 = number<unsigned>(field, value);
            } else if (field == "rules.known_ports") {
                cfg.rules.known_ports = PortSet::parse(value);
            } else if (field == "engine.workers") {
                cfg.engine.workers = number<unsigned>(field, value);
            } else if (field == "engine.partitioning") {
                if (value == "slice") {
                    cfg.engine.partitioning = Partitioning::BySliceIndex;
                } else if (value == "ip") {
                    cfg.engine.partitioning = Partitioning::ByIpHash;
                } else {
                    throw ConfigError(field, "expected 'slice' or 'ip'");
                }
            } else if (field == "engine.mode") {
                if (value == "batch") {
                    cfg.engine.mode = ExecutionMode::Batch;
                } else if (value == "stream") {
                    cfg.engine.mode = ExecutionMode::Streaming;
                } else {
                    throw ConfigError(field, "expected 'batch' or 'stream'");
                }
            } else if (field == "engine.watermark_lag_seconds") {
                cfg.engine.watermark_lag = seconds(field, value);
            } else if (field == "eval.whitelist") {
                cfg.whitelist = LabelWhitelist::parse(value);
            } else if (field == "eval.whitelist_file") {
                std::filesystem::path list(value);
                if (list.is_relative()) {
                    list = path.parent_path() / list;
                }
                cfg.whitelist = LabelWhitelist::load(list);
            } else if (field == "eval.directional") {
                cfg.directional = boolean(field, value);
            } else if (field == "ingest.strict") {
                cfg.flow_file.strict = boolean(field, value);
                cfg.ground_truth.strict = cfg.flow_file.strict;
            } else if (field == "ingest.max_error_ratio") {
                cfg.flow_file.max_error_ratio = finite_number(field, value);
            }
        }
    }
}

AppConfig load_config(const std::filesystem::path& path) {
    AppConfig cfg;
    apply_config_file(cfg, path);
    cfg.validate();
    return cfg;
}

std::vector<double> parse_threshold_list(std::string_view text, std::string_view field) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        std::string token(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        if (!token.empty()) {
            out.push_back(finite_number(std::string(field), token));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (out.empty()) {
        throw ConfigError(std::string(field), "empty threshold list");
    }
    return out;
}

}// namespace scandet::cli
