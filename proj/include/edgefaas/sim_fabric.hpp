#pragma once

#include "edgefaas/backends.hpp"
#include "edgefaas/scheduler.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgefaas {

// Node IDs inside a topology file. They are independent of the resource IDs
// the registry hands out; records are tied to nodes through their endpoint
// hosts ("node-<id>.sim").
using FabricNodeId = std::uint32_t;

struct FabricNode {
    FabricNodeId id = 0;
    Tier tier = Tier::Iot;
    std::uint32_t node = 1;
    std::uint64_t memory = 0;
    std::uint32_t cpu = 1;
    std::uint64_t storage = 0;
    std::uint32_t gpunode = 0;
    std::uint32_t gpu = 0;
};

class FabricTopology {
public:
    // YAML: resources: [{id, tier, node, memory, cpu, storage, gpunode, gpu}],
    // rtt_ms: [[a, b, ms], ...], bandwidth_mbps: [[a, b, mbps], ...].
    // Every bandwidth link needs an rtt entry. Throws Error(InvalidField).
    static FabricTopology parse(std::string_view yaml);
    static FabricTopology load(const std::filesystem::path& path);

    void add_node(FabricNode node);
    void set_rtt(FabricNodeId a, FabricNodeId b, double ms);
    void set_bandwidth(FabricNodeId a, FabricNodeId b, double mbps);

    const std::vector<FabricNode>& nodes() const noexcept { return nodes_; }
    const FabricNode& node(FabricNodeId id) const;
    bool has_node(FabricNodeId id) const noexcept;
    std::vector<FabricNodeId> nodes_of_tier(Tier tier) const;

    std::optional<double> rtt(FabricNodeId a, FabricNodeId b) const;
    std::optional<double> bandwidth(FabricNodeId a, FabricNodeId b) const;

    // bytes*8 / (mbps*1e6) + rtt/1000 over the direct link, or over the best
    // single intermediate hop when there is none. Throws Error(NoLink).
    double transfer_time(std::uint64_t bytes, FabricNodeId src, FabricNodeId dst) const;

    // Registration record for a node, endpoints on node-<id>.sim.
    ResourceRecord manifest_for(FabricNodeId id) const;
    static std::string host_of(FabricNodeId id);
    // Node behind a record's gateway (or object store) host.
    std::optional<FabricNodeId> node_of(const ResourceRecord& record) const;

    // RTTs between registered records, in registry-ID space.
    RttMatrix rtt_for(std::span<const ResourceRecord> records) const;

private:
    using Key = std::pair<FabricNodeId, FabricNodeId>;
    static Key key(FabricNodeId a, FabricNodeId b) { return {std::min(a, b), std::max(a, b)}; }
    double direct_time(std::uint64_t bytes, FabricNodeId a, FabricNodeId b) const;

    std::vector<FabricNode> nodes_;
    std::map<Key, double> rtt_;
    std::map<Key, double> bandwidth_;
};

// Deterministic in-process cluster model: function deployments, synthetic
// invocations and per-node object stores. Thread-safe.
class SimFabric final : public FaasProvider, public ObjectStore {
public:
    using ObjectResolver = std::function<std::string(const std::string& url)>;

    explicit SimFabric(FabricTopology topology);

    const FabricTopology& topology() const noexcept { return topology_; }

    void set_online(FabricNodeId id, bool online);
    void set_reject_deploys(FabricNodeId id, bool reject);
    // Lets vector-average bodies read inputs given as object URLs.
    void set_object_resolver(ObjectResolver resolver);

    void deploy(const ResourceRecord& resource, const std::string& function,
                const DeploymentPackage& package) override;
    void remove(const ResourceRecord& resource, const std::string& function) override;
    FunctionDescription describe(const ResourceRecord& resource, const std::string& function) override;
    InvokeResult invoke(const ResourceRecord& resource, const std::string& function,
                        const std::string& body) override;

    void make_bucket(const ResourceRecord& resource, const std::string& bucket) override;
    void remove_bucket(const ResourceRecord& resource, const std::string& bucket) override;
    void put_object(const ResourceRecord& resource, const std::string& bucket,
                    const std::string& object, std::string_view bytes) override;
    std::string get_object(const ResourceRecord& resource, const std::string& bucket,
                           const std::string& object) override;
    void delete_object(const ResourceRecord& resource, const std::string& bucket,
                       const std::string& object) override;
    std::vector<std::string> list_objects(const ResourceRecord& resource,
                                          const std::string& bucket) override;
    std::optional<std::uint64_t> bytes_used(const ResourceRecord& resource) override;

    // Introspection for tests and the harness.
    std::set<std::string> deployed_functions(FabricNodeId id) const;
    std::uint64_t invocation_count(FabricNodeId id, const std::string& function) const;
    std::uint64_t total_invocations() const;
    std::uint64_t object_version(FabricNodeId id, const std::string& bucket,
                                 const std::string& object) const;

private:
    struct Deployment {
        PackageDescriptor descriptor;
        std::uint64_t invocations = 0;
    };
    struct StoredObject {
        std::string bytes;
        std::uint64_t version = 0;
    };
    struct NodeState {
        bool online = true;
        bool reject_deploys = false;
        std::map<std::string, Deployment> functions;
        std::map<std::string, std::map<std::string, StoredObject>> buckets;
    };

    // Resolves the record's node and checks reachability. Caller holds mutex_.
    NodeState& reach(const ResourceRecord& resource);
    std::string run_body(const PackageDescriptor& descriptor, const std::string& payload);

    FabricTopology topology_;
    mutable std::mutex mutex_;
    std::map<FabricNodeId, NodeState> state_;
    ObjectResolver resolver_;
};

// Weighted mean of {"weights":[...],"count":n} items. Bare arrays count once.
json vector_average(const std::vector<json>& items);

} // namespace edgefaas
