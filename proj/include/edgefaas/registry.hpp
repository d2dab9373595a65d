#pragma once

#include "edgefaas/error.hpp"
#include "edgefaas/mapping_store.hpp"

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgefaas {

enum class Tier { Iot, Edge, Cloud };

// Case-insensitive match against iot/edge/cloud.
std::optional<Tier> tier_from_name(std::string_view name) noexcept;
std::string_view to_string(Tier tier) noexcept;

inline constexpr std::string_view kRedacted = "<redacted>";

// One registered cluster or device. Capacities are per physical node.
struct ResourceRecord {
    ResourceId resource_id = 0;
    std::string name;
    std::uint32_t node = 1;
    std::uint64_t memory = 0;
    std::uint32_t cpu = 1;
    std::uint64_t storage = 0;
    std::uint32_t gpunode = 0;
    std::uint32_t gpu = 0;
    std::string gateway;
    std::string pwd;
    std::string prometheus;
    std::string minio;
    std::string minio_access_key;
    std::string minio_secret_key;

    std::optional<Tier> tier() const noexcept { return tier_from_name(name); }

    std::uint64_t total_memory() const noexcept { return memory * node; }
    std::uint64_t total_storage() const noexcept { return storage * node; }
    double total_cpu() const noexcept { return static_cast<double>(cpu) * node; }
    double total_gpu() const noexcept { return static_cast<double>(gpu) * gpunode; }

    ResourceRecord redacted() const;

    friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

json to_json(const ResourceRecord& record);
ResourceRecord resource_from_json(const json& value);

// Throws Error(MalformedManifest) when a capacity or gpu invariant fails or
// an endpoint is not host:port.
void validate(const ResourceRecord& record);

struct ParsedManifest {
    ResourceRecord record;
    std::vector<std::string> warnings;
};

// Parses a registration manifest (YAML; JSON is accepted as a YAML subset).
// Unknown keys and tier names outside iot/edge/cloud produce warnings.
ParsedManifest parse_resource_manifest(std::string_view document);

class Registry {
public:
    explicit Registry(MappingStore& store);

    // Assigns the smallest resource ID not currently in use.
    ResourceId register_resource(ResourceRecord record);
    ResourceId register_manifest(std::string_view document,
                                 std::vector<std::string>* warnings = nullptr);

    // Refuses while any deployed function or bucket still references the ID.
    void unregister_resource(ResourceId id);

    // Live records with gateway password and object-store keys redacted.
    std::vector<ResourceRecord> list_resources() const;

    // Unredacted records, for the backends.
    std::vector<ResourceRecord> records() const;
    std::optional<ResourceRecord> find(ResourceId id) const;
    ResourceRecord get(ResourceId id) const;

private:
    MappingStore& store_;
    mutable std::mutex mutex_;
};

} // namespace edgefaas
