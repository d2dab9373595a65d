#pragma once

#include "edgefaas/appmodel.hpp"
#include "edgefaas/functions.hpp"
#include "edgefaas/mapping_store.hpp"
#include "edgefaas/registry.hpp"
#include "edgefaas/sim_fabric.hpp"
#include "edgefaas/storage.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

namespace edgefaas {

struct GatewayConfig {
    std::string listen_host = "127.0.0.1";
    std::uint16_t port = 8080;
    std::string store_backend = "file";  // file | memory | http
    std::string store_path = "edgefaas-state";  // directory, or host:port for http
    std::string backend = "sim";  // sim | http
    std::string fabric_path;      // topology for the sim backend
    std::string profile_path;     // latency profile for experiments
    bool register_fabric = false; // sim only: register every fabric node at startup
    std::string policy = "default";
    double staleness_bound = 60.0;
    double async_ttl = 3600.0;
    double barrier_timeout = 300.0;
    std::uint64_t large_data_threshold = kDefaultLargeDataThreshold;
    // Resource-ID RTTs for the http backend: [[a, b, ms], ...].
    std::vector<std::tuple<ResourceId, ResourceId, double>> rtt_ms;

    // Throws Error(InvalidField).
    static GatewayConfig parse(std::string_view yaml);
    static GatewayConfig load(const std::filesystem::path& path);
    void validate() const;
};

struct Backends {
    std::shared_ptr<KvBackend> kv;
    std::shared_ptr<FaasProvider> faas;
    std::shared_ptr<ObjectStore> objects;
    std::shared_ptr<MetricsProvider> metrics;
    RttSource rtt;
};

// Everything backed by one simulated fabric.
Backends simulated_backends(std::shared_ptr<SimFabric> fabric, std::shared_ptr<KvBackend> kv,
                            std::shared_ptr<MetricsProvider> metrics = nullptr);

// The control plane: mappings, registry, applications, storage and functions
// wired to one set of backends. Constructing a second Platform over the same
// KV backend is a restart.
class Platform {
public:
    Platform(GatewayConfig config, Backends backends, MonotonicClock clock = steady_seconds(),
             PolicyRegistry policies = PolicyRegistry::with_builtins());
    ~Platform();
    Platform(const Platform&) = delete;
    Platform& operator=(const Platform&) = delete;

    MappingStore& store() noexcept { return *store_; }
    Registry& registry() noexcept { return *registry_; }
    AppCatalog& catalog() noexcept { return *catalog_; }
    StorageService& storage() noexcept { return *storage_; }
    FunctionService& functions() noexcept { return *functions_; }
    const GatewayConfig& config() const noexcept { return config_; }
    const Backends& backends() const noexcept { return backends_; }

private:
    GatewayConfig config_;
    Backends backends_;
    std::unique_ptr<MappingStore> store_;
    std::unique_ptr<Registry> registry_;
    std::unique_ptr<AppCatalog> catalog_;
    std::unique_ptr<StorageService> storage_;
    std::unique_ptr<FunctionService> functions_;
};

// Registers every fabric node not registered yet. Returns node -> resource ID.
std::map<FabricNodeId, ResourceId> register_fabric(Registry& registry, const FabricTopology& topology);
// Node -> resource ID for the registered records that sit on the fabric.
std::map<FabricNodeId, ResourceId> fabric_ids(Registry& registry, const FabricTopology& topology);

// A platform plus the backends it owns, built from a gateway config.
struct PlatformBundle {
    std::shared_ptr<SimFabric> fabric;  // null for the http backend
    Backends backends;
    std::unique_ptr<Platform> platform;
};
PlatformBundle build_platform(const GatewayConfig& config);

} // namespace edgefaas
