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

#include <array>
#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace scandet {

using Micros = std::chrono::microseconds;
/// Microseconds since the Unix epoch.
using Timestamp = std::chrono::sys_time<Micros>;

inline Timestamp from_epoch_us(std::int64_t us) { return Timestamp{Micros{us}}; }
inline std::int64_t to_epoch_us(Timestamp ts) { return ts.time_since_epoch().count(); }

/// IPv4 or IPv6 address in network byte order. IPv4 values occupy the first
/// four bytes; the remaining bytes stay zero so that equality and ordering
/// are plain byte comparisons.
class IpAddress {
  public:
    enum class Family : std::uint8_t { V4 = 4, V6 = 6 };

    IpAddress() = default;

    static IpAddress v4(std::uint32_t host_order);
    static IpAddress v6(const std::array<std::uint8_t, 16>& bytes);

    /// Returns nullopt for anything inet_pton rejects.
    static std::optional<IpAddress> parse(std::string_view text);
    /// Like parse() but throws ParseError.
    static IpAddress from_string(std::string_view text);

    std::string to_string() const;

    Family family() const noexcept { return family_; }
    bool is_v4() const noexcept { return family_ == Family::V4; }
    unsigned bit_width() const noexcept { return is_v4() ? 32U : 128U; }

    /// Host-order value of an IPv4 address. Undefined for IPv6.
    std::uint32_t v4_value() const noexcept;
    std::span<const std::uint8_t> bytes() const noexcept { return {bytes_.data(), is_v4() ? 4U : 16U}; }

    /// Network address of the /prefix containing this address. Throws RangeError
    /// if prefix exceeds the family's width.
    IpAddress masked(unsigned prefix) const;

    std::size_t hash() const noexcept;

    friend auto operator<=>(const IpAddress&, const IpAddress&) = default;
    friend bool operator==(const IpAddress&, const IpAddress&) = default;

  private:
    Family family_ = Family::V4;
    std::array<std::uint8_t, 16> bytes_{};
};

/// IP protocol number. TCP and UDP carry ports; everything else is ingested
/// with both ports set to zero.
struct Protocol {
    std::uint8_t code = 0;

    static constexpr Protocol tcp() { return {6}; }
    static constexpr Protocol udp() { return {17}; }
    static constexpr Protocol icmp() { return {1}; }

    constexpr bool has_ports() const { return code == 6 || code == 17; }

    /// "TCP", "UDP", or the decimal protocol number.
    std::string to_string() const;
    /// Accepts "TCP", "UDP" (any case) or a decimal number in [0, 255].
    static std::optional<Protocol> parse(std::string_view text);

    friend constexpr auto operator<=>(const Protocol&, const Protocol&) = default;
};

/// One unidirectional flow summary.
struct FlowRecord {
    IpAddress src;
    IpAddress dst;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::tcp();
    Timestamp first_seen{};
    Timestamp last_seen{};
    std::uint64_t packet_count = 1;
    std::uint64_t byte_count = 0;

    /// first_seen <= last_seen and at least one packet.
    bool valid() const noexcept { return first_seen <= last_seen && packet_count >= 1; }

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

/// The couple (IP address, slice). Ordered by slice first, then address.
struct SliceKey {
    IpAddress ip;
    std::uint64_t slice_index = 0;

    friend bool operator==(const SliceKey&, const SliceKey&) = default;
    friend std::strong_ordering operator<=>(const SliceKey& a, const SliceKey& b) {
        if (auto c = a.slice_index <=> b.slice_index; c != 0) {
            return c;
        }
        return a.ip <=> b.ip;
    }
};

struct SliceConfig {
    static constexpr Micros kDefaultDuration = std::chrono::seconds{30};

    Timestamp trace_start{};
    Micros slice_duration = kDefaultDuration;

    /// Throws ConfigError when slice_duration <= 0.
    void validate() const;

    Timestamp slice_begin(std::uint64_t index) const { return trace_start + slice_duration * static_cast<std::int64_t>(index); }
    Timestamp slice_end(std::uint64_t index) const { return slice_begin(index + 1); }
};

/// floor((ts - trace_start) / slice_duration). Throws RangeError if ts < trace_start.
std::uint64_t slice_of(Timestamp ts, const SliceConfig& cfg);

/// Slice of the flow's first packet; a flow belongs to exactly one slice.
inline std::uint64_t slice_of(const FlowRecord& flow, const SliceConfig& cfg) { return slice_of(flow.first_seen, cfg); }

/// Slice configuration aligned to the earliest first_seen in `flows`
/// (or the epoch for an empty set).
SliceConfig slice_config_for(std::span<const FlowRecord> flows, Micros slice_duration = SliceConfig::kDefaultDuration);

struct IpAddressHash {
    std::size_t operator()(const IpAddress& ip) const noexcept { return ip.hash(); }
};

struct SliceKeyHash {
    std::size_t operator()(const SliceKey& key) const noexcept {
        return key.ip.hash() ^ (key.slice_index * 0x9E3779B97F4A7C15ULL + 0x7F4A7C15ULL);
    }
};

}// namespace scandet

template<>
struct std::hash<scandet::IpAddress> {
    std::size_t operator()(const scandet::IpAddress& ip) const noexcept { return ip.hash(); }
};
