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
#include <scandet/flow_core.hpp>

#include <algorithm>
#include <arpa/inet.h>
#include <charconv>
#include <cstring>

namespace scandet {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

}// namespace

IpAddress IpAddress::v4(std::uint32_t host_order) {
    IpAddress ip;
    ip.family_ = Family::V4;
    ip.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
    ip.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
    ip.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
    ip.bytes_[3] = static_cast<std::uint8_t>(host_order);
    return ip;
}

IpAddress IpAddress::v6(const std::array<std::uint8_t, 16>& bytes) {
    IpAddress ip;
    ip.family_ = Family::V6;
    ip.bytes_ = bytes;
    return ip;
}

std::optional<IpAddress> IpAddress::parse(std::string_view text) {
    // inet_pton needs a terminated string; addresses are short.
    char buf[INET6_ADDRSTRLEN + 1];
    if (text.empty() || text.size() > INET6_ADDRSTRLEN) {
        return std::nullopt;
    }
    std::memcpy(buf, text.data(), text.size());
    buf[text.size()] = '\0';

    IpAddress ip;
    if (text.find(':') == std::string_view::npos) {
        if (inet_pton(AF_INET, buf, ip.bytes_.data()) != 1) {
            return std::nullopt;
        }
        ip.family_ = Family::V4;
    } else {
        if (inet_pton(AF_INET6, buf, ip.bytes_.data()) != 1) {
            return std::nullopt;
        }
        ip.family_ = Family::V6;
    }
    return ip;
}

IpAddress IpAddress::from_string(std::string_view text) {
    auto ip = parse(text);
    if (!ip) {
        throw ParseError("invalid IP address '" + std::string(text) + "'");
    }
    return *ip;
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN];
    const int af = is_v4() ? AF_INET : AF_INET6;
    if (inet_ntop(af, bytes_.data(), buf, sizeof(buf)) == nullptr) {
        return {};
    }
    return buf;
}

std::uint32_t IpAddress::v4_value() const noexcept {
    return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) | (std::uint32_t{bytes_[2]} << 8)
        | std::uint32_t{bytes_[3]};
}

IpAddress IpAddress::masked(unsigned prefix) const {
    if (prefix > bit_width()) {
        throw RangeError("prefix /" + std::to_string(prefix) + " exceeds address width");
    }
    IpAddress out = *this;
    for (unsigned i = 0; i < 16; ++i) {
        const unsigned bit_lo = i * 8;
        if (bit_lo >= prefix) {
            out.bytes_[i] = 0;
        } else if (prefix - bit_lo < 8) {
            const auto keep = static_cast<std::uint8_t>(0xFFU << (8 - (prefix - bit_lo)));
            out.bytes_[i] &= keep;
        }
    }
    return out;
}

std::size_t IpAddress::hash() const noexcept {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;
    std::memcpy(&hi, bytes_.data(), 8);
    std::memcpy(&lo, bytes_.data() + 8, 8);
    return mix64(hi ^ mix64(lo + static_cast<std::uint64_t>(family_)));
}

std::string Protocol::to_string() const {
    if (code == 6) {
        return "TCP";
    }
    if (code == 17) {
        return "UDP";
    }
    return std::to_string(code);
}

std::optional<Protocol> Protocol::parse(std::string_view text) {
    auto iequals = [](std::string_view a, std::string_view b) {
        return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                   return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
               });
    };
    if (iequals(text, "TCP")) {
        return tcp();
    }
    if (iequals(text, "UDP")) {
        return udp();
    }
    unsigned value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc{} || ptr != end || value > 255) {
        return std::nullopt;
    }
    return Protocol{static_cast<std::uint8_t>(value)};
}

void SliceConfig::validate() const {
    if (slice_duration <= Micros::zero()) {
        throw ConfigError("slice.seconds", "slice duration must be > 0");
    }
}

std::uint64_t slice_of(Timestamp ts, const SliceConfig& cfg) {
    if (cfg.slice_duration <= Micros::zero()) {
        cfg.validate();
    }
    if (ts < cfg.trace_start) {
        throw RangeError("timestamp " + std::to_string(to_epoch_us(ts)) + " precedes trace start "
                         + std::to_string(to_epoch_us(cfg.trace_start)));
    }
    return static_cast<std::uint64_t>((ts - cfg.trace_start) / cfg.slice_duration);
}

SliceConfig slice_config_for(std::span<const FlowRecord> flows, Micros slice_duration) {
    SliceConfig cfg;
    cfg.slice_duration = slice_duration;
    if (!flows.empty()) {
        cfg.trace_start = std::min_element(flows.begin(), flows.end(), [](const auto& a, const auto& b) {
                              return a.first_seen < b.first_seen;
                          })->first_seen;
    }
    return cfg;
}

}// namespace scandet
