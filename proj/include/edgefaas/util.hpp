#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace edgefaas {

// Capacity strings: an unsigned integer with an optional KB/MB/GB/TB suffix,
// base 1024. A bare integer is a byte count. Decimal fractions are rejected.
std::optional<std::uint64_t> parse_capacity(std::string_view text);

// Renders the largest exact unit, e.g. 64 GiB -> "64GB".
std::string format_capacity(std::uint64_t bytes);

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string str() const { return host + ":" + std::to_string(port); }
};

// host:port with a DNS-style or dotted host and a port in 1..65535.
std::optional<Endpoint> parse_endpoint(std::string_view text);

std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b) noexcept;
std::string_view trim(std::string_view text) noexcept;

std::string base64_encode(std::string_view bytes);
std::optional<std::string> base64_decode(std::string_view text);

bool is_valid_utf8(std::string_view bytes) noexcept;

// Final path component, the name an uploaded file is stored under.
std::string file_name_of(std::string_view path);

} // namespace edgefaas
