#include "edgefaas/object_url.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cctype>

namespace edgefaas {

std::string ObjectUrl::render() const
{
    return application + "/" + bucket + "/" + std::to_string(resource_id) + "/" + object;
}

std::optional<ObjectUrl> ObjectUrl::parse(std::string_view text)
{
    std::array<std::string_view, 4> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        auto slash = text.find('/', start);
        bool last = i + 1 == parts.size();
        if (last != (slash == std::string_view::npos)) {
            return std::nullopt;
        }
        parts[i] = text.substr(start, last ? std::string_view::npos : slash - start);
        if (parts[i].empty()) {
            return std::nullopt;
        }
        start = slash + 1;
    }
    auto id_text = parts[2];
    if (!std::all_of(id_text.begin(), id_text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        return std::nullopt;
    }
    ResourceId id = 0;
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), id);
    if (ec != std::errc{} || ptr != id_text.data() + id_text.size()) {
        return std::nullopt;
    }
    // Leading zeros would break render(parse(s)) == s.
    if (id_text.size() > 1 && id_text.front() == '0') {
        return std::nullopt;
    }
    return ObjectUrl{std::string(parts[0]), std::string(parts[1]), id, std::string(parts[3])};
}

} // namespace edgefaas
