#pragma once

#include "edgefaas/appmodel.hpp"
#include "edgefaas/metrics.hpp"
#include "edgefaas/registry.hpp"

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace edgefaas {

// Symmetric round-trip times in milliseconds. The diagonal is zero and
// undeclared pairs are unreachable (infinite).
class RttMatrix {
public:
    void set(ResourceId a, ResourceId b, double ms);
    double get(ResourceId a, ResourceId b) const noexcept;
    bool declared(ResourceId a, ResourceId b) const noexcept;

    RttMatrix scaled(double factor) const;

    const std::map<std::pair<ResourceId, ResourceId>, double>& entries() const noexcept
    {
        return entries_;
    }

private:
    std::map<std::pair<ResourceId, ResourceId>, double> entries_;  // key.first < key.second
};

using SnapshotTable = std::map<ResourceId, MetricsSnapshot>;

struct PlacementContext {
    FunctionSpec function;
    std::string application;
    std::vector<ResourceId> data_locations;
    std::map<std::string, std::vector<ResourceId>> dependency_placements;
    RttMatrix rtt;
};

// Phase one: privacy and capacity filtering. A resource without a snapshot is
// excluded. Returns ascending IDs; throws Error(NoCandidates) when empty.
std::vector<ResourceId> filter_phase_one(const FunctionSpec& fn,
                                         std::span<const ResourceRecord> resources,
                                         const SnapshotTable& snapshots,
                                         std::span<const ResourceId> data_locations);

// Anchors the placement: data locations for data affinity, the union of the
// dependencies' placements for function affinity.
std::vector<ResourceId> placement_anchors(const PlacementContext& ctx);

// Phase two: RTT locality among candidates of the function's nodetype.
// reduce=auto keeps the nearest candidate of every anchor, reduce=1 the single
// candidate with the smallest RTT sum over all anchors. Ties go to the
// smallest ID. Returns ascending IDs.
std::vector<ResourceId> place_phase_two(const PlacementContext& ctx,
                                        std::span<const ResourceId> candidates,
                                        std::span<const ResourceRecord> resources);

// What a policy is asked to place.
struct FunctionCreation {
    std::string application;
    std::string function;
    std::vector<std::string> data_object_urls;
    // Extra data locations not backed by stored objects (e.g. a camera feed).
    std::vector<ResourceId> data_locations;
};

// Control-plane state a policy may consult.
struct SchedulingView {
    const ApplicationDag& dag;
    std::vector<ResourceRecord> resources;
    SnapshotTable snapshots;
    RttMatrix rtt;
    // Current CandidateSets of the application's functions, by function name.
    std::map<std::string, std::vector<ResourceId>> placements;
};

// Union of explicit locations and the resource segment of each object URL.
// Throws Error(MalformedUrl) for an unparsable URL.
std::vector<ResourceId> data_locations_of(const FunctionCreation& request);

class SchedulingPolicy {
public:
    virtual ~SchedulingPolicy() = default;
    virtual std::string name() const = 0;
    virtual std::vector<ResourceId> schedule(const FunctionCreation& request,
                                             const SchedulingView& view) = 0;
};

// filter_phase_one followed by place_phase_two.
class TwoPhasePolicy final : public SchedulingPolicy {
public:
    std::string name() const override { return "default"; }
    std::vector<ResourceId> schedule(const FunctionCreation& request,
                                     const SchedulingView& view) override;
};

class ConstantPolicy final : public SchedulingPolicy {
public:
    explicit ConstantPolicy(std::vector<ResourceId> ids)
      : ids_(std::move(ids))
    {
    }
    std::string name() const override { return "constant"; }
    std::vector<ResourceId> schedule(const FunctionCreation&, const SchedulingView&) override
    {
        return ids_;
    }

private:
    std::vector<ResourceId> ids_;
};

// Phase one, then the single least-loaded resource of the function's nodetype.
class LowestLoadPolicy final : public SchedulingPolicy {
public:
    std::string name() const override { return "lowest-load"; }
    std::vector<ResourceId> schedule(const FunctionCreation& request,
                                     const SchedulingView& view) override;
};

class PolicyRegistry {
public:
    using Factory = std::function<std::unique_ptr<SchedulingPolicy>()>;

    // Registry pre-populated with "default" and "lowest-load".
    static PolicyRegistry with_builtins();

    void add(const std::string& name, Factory factory);
    std::unique_ptr<SchedulingPolicy> create(const std::string& name) const;
    std::vector<std::string> names() const;

private:
    std::map<std::string, Factory> factories_;
};

} // namespace edgefaas
