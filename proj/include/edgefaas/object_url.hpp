#pragma once

#include "edgefaas/error.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace edgefaas {

// Locator returned by put_object: "application/bucket/resource_id/object".
struct ObjectUrl {
    std::string application;
    std::string bucket;  // user-visible name, not the namespaced one
    ResourceId resource_id = 0;
    std::string object;

    std::string render() const;

    // Four non-empty slash-free segments, the third a decimal resource ID.
    static std::optional<ObjectUrl> parse(std::string_view text);

    friend bool operator==(const ObjectUrl&, const ObjectUrl&) = default;
};

} // namespace edgefaas
