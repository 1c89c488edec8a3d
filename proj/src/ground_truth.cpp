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

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

namespace scandet {

namespace pt = boost::property_tree;

namespace {

constexpr std::string_view kAttrNode = "<xmlattr>";
constexpr std::string_view kAdmdNamespace = "http://www.nict.go.jp/admd";

std::string_view local_name(std::string_view name) {
    const auto colon = name.rfind(':');
    return colon == std::string_view::npos ? name : name.substr(colon + 1);
}

std::string lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::optional<std::string> attribute(const pt::ptree& node, std::string_view name) {
    auto attrs = node.get_child_optional(pt::ptree::path_type(std::string(kAttrNode), '\0'));
    if (!attrs) {
        return std::nullopt;
    }
    for (const auto& [key, value] : *attrs) {
        if (local_name(key) == name) {
            return value.data();
        }
    }
    return std::nullopt;
}

// Label attribute names seen across admd producers, in lookup order.
constexpr std::array<std::string_view, 4> kLabelAttributes = {"value", "label", "taxonomy", "heuristic"};

struct Rejection {
    std::string reason;
};

std::optional<std::uint16_t> parse_port(const std::optional<std::string>& text) {
    if (!text || text->empty()) {
        return std::nullopt;
    }
    unsigned value = 0;
    const char* end = text->data() + text->size();
    auto [ptr, ec] = std::from_chars(text->data(), end, value);
    if (ec != std::errc{} || ptr != end || value > 65535) {
        throw Rejection{"invalid port '" + *text + "'"};
    }
    return static_cast<std::uint16_t>(value);
}

std::optional<IpAddress> parse_filter_ip(const std::optional<std::string>& text) {
    if (!text || text->empty()) {
        return std::nullopt;
    }
    auto ip = IpAddress::parse(*text);
    if (!ip) {
        throw Rejection{"invalid address '" + *text + "'"};
    }
    return ip;
}

void collect_filters(const pt::ptree& node, GroundTruthEntry& entry) {
    for (const auto& [name, child] : node) {
        if (name == kAttrNode) {
            continue;
        }
        if (local_name(name) == "filter") {
            TrafficFilter filter;
            filter.src_ip = parse_filter_ip(attribute(child, "src_ip"));
            filter.dst_ip = parse_filter_ip(attribute(child, "dst_ip"));
            filter.src_port = parse_port(attribute(child, "src_port"));
            filter.dst_port = parse_port(attribute(child, "dst_port"));
            filter.protocol = attribute(child, "proto").value_or("");
            if (filter.src_ip) {
                entry.src_ips.insert(*filter.src_ip);
            }
            if (filter.dst_ip) {
                entry.dst_ips.insert(*filter.dst_ip);
            }
            entry.filters.push_back(std::move(filter));
        }
        collect_filters(child, entry);
    }
}

GroundTruthEntry build_entry(const pt::ptree& node, SourceFile file) {
    GroundTruthEntry entry;
    entry.source_file = file;

    const auto type = attribute(node, "type");
    if (!type) {
        throw Rejection{"anomaly without a type attribute"};
    }
    const auto category = parse_category(*type);
    if (!category) {
        throw Rejection{"unknown anomaly type '" + *type + "'"};
    }
    entry.category = *category;

    for (auto name : kLabelAttributes) {
        if (auto label = attribute(node, name)) {
            entry.taxonomy_label = *label;
            break;
        }
    }

    collect_filters(node, entry);
    if (entry.src_ips.empty() && entry.dst_ips.empty()) {
        throw Rejection{"anomaly '" + entry.taxonomy_label + "' names no address"};
    }
    return entry;
}

void walk(const pt::ptree& node, SourceFile file, const GroundTruthOptions& options, GroundTruthSet& out,
          std::vector<std::string>* warnings, std::size_t& ordinal) {
    for (const auto& [name, child] : node) {
        if (name == kAttrNode) {
            continue;
        }
        if (local_name(name) != "anomaly") {
            walk(child, file, options, out, warnings, ordinal);
            continue;
        }
        ++ordinal;
        try {
            out.entries.push_back(build_entry(child, file));
        } catch (const Rejection& r) {
            const std::string message = "anomaly #" + std::to_string(ordinal) + " rejected: " + r.reason;
            if (options.strict) {
                throw GroundTruthError(message);
            }
            if (warnings != nullptr) {
                warnings->push_back(message);
            }
        }
    }
}

std::set<IpAddress> collect(const GroundTruthSet& gt, std::optional<SourceFile> file, bool src, bool dst) {
    std::set<IpAddress> out;
    for (const auto& e : gt.entries) {
        if (file && e.source_file != *file) {
            continue;
        }
        if (src) {
            out.insert(e.src_ips.begin(), e.src_ips.end());
        }
        if (dst) {
            out.insert(e.dst_ips.begin(), e.dst_ips.end());
        }
    }
    return out;
}

}// namespace

std::string_view to_string(Category category) {
    switch (category) {
        case Category::Anomalous: return "anomalous";
        case Category::Suspicious: return "suspicious";
        case Category::Notice: return "notice";
        case Category::Benign: return "benign";
    }
    return "anomalous";
}

std::optional<Category> parse_category(std::string_view text) {
    const auto t = lower(text);
    if (t == "anomalous") {
        return Category::Anomalous;
    }
    if (t == "suspicious") {
        return Category::Suspicious;
    }
    if (t == "notice") {
        return Category::Notice;
    }
    if (t == "benign") {
        return Category::Benign;
    }
    return std::nullopt;
}

std::set<IpAddress> GroundTruthEntry::ip_set() const {
    std::set<IpAddress> out = src_ips;
    out.insert(dst_ips.begin(), dst_ips.end());
    return out;
}

std::set<IpAddress> GroundTruthSet::ip_set(std::optional<SourceFile> file) const { return collect(*this, file, true, true); }
std::set<IpAddress> GroundTruthSet::src_ip_set(std::optional<SourceFile> file) const { return collect(*this, file, true, false); }
std::set<IpAddress> GroundTruthSet::dst_ip_set(std::optional<SourceFile> file) const { return collect(*this, file, false, true); }

GroundTruthSet parse_ground_truth(std::istream& in, SourceFile file, GroundTruthOptions options,
                                  std::vector<std::string>* warnings) {
    pt::ptree tree;
    try {
        pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw GroundTruthError(std::string("malformed ground-truth XML: ") + e.what());
    }
    GroundTruthSet out;
    std::size_t ordinal = 0;
    walk(tree, file, options, out, warnings, ordinal);
    return out;
}

GroundTruthSet read_ground_truth(const std::optional<std::filesystem::path>& anomalous_path,
                                 const std::optional<std::filesystem::path>& notice_path, GroundTruthOptions options,
                                 std::vector<std::string>* warnings) {
    GroundTruthSet out;
    auto load = [&](const std::filesystem::path& path, SourceFile file) {
        std::ifstream in(path);
        if (!in) {
            throw IoError("cannot open ground-truth file '" + path.string() + "'");
        }
        auto part = parse_ground_truth(in, file, options, warnings);
        std::move(part.entries.begin(), part.entries.end(), std::back_inserter(out.entries));
    };
    if (anomalous_path) {
        load(*anomalous_path, SourceFile::AnomalousFile);
    }
    if (notice_path) {
        load(*notice_path, SourceFile::NoticeFile);
    }
    return out;
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthEntry> entries) {
    pt::ptree dataset;
    dataset.put("<xmlattr>.xmlns:admd", std::string(kAdmdNamespace));
    for (const auto& entry : entries) {
        pt::ptree anomaly;
        anomaly.put("<xmlattr>.type", std::string(to_string(entry.category)));
        anomaly.put("<xmlattr>.value", entry.taxonomy_label);

        pt::ptree slice;
        auto add_filter = [&slice](const TrafficFilter& f) {
            pt::ptree node;
            if (f.src_ip) {
                node.put("<xmlattr>.src_ip", f.src_ip->to_string());
            }
            if (f.src_port) {
                node.put("<xmlattr>.src_port", *f.src_port);
            }
            if (f.dst_ip) {
                node.put("<xmlattr>.dst_ip", f.dst_ip->to_string());
            }
            if (f.dst_port) {
                node.put("<xmlattr>.dst_port", *f.dst_port);
            }
            if (!f.protocol.empty()) {
                node.put("<xmlattr>.proto", f.protocol);
            }
            slice.add_child("filter", node);
        };
        if (!entry.filters.empty()) {
            for (const auto& f : entry.filters) {
                add_filter(f);
            }
        } else {
            for (const auto& ip : entry.src_ips) {
                add_filter(TrafficFilter{ip, std::nullopt, std::nullopt, std::nullopt, {}});
            }
            for (const auto& ip : entry.dst_ips) {
                add_filter(TrafficFilter{std::nullopt, ip, std::nullopt, std::nullopt, {}});
            }
        }
        anomaly.add_child("slice", slice);
        dataset.add_child("anomaly", anomaly);
    }
    pt::ptree doc;
    doc.add_child("admd:dataset", dataset);
    pt::write_xml(out, doc, pt::xml_writer_make_settings<std::string>(' ', 2));
}

}// namespace scandet
