#include "edgefaas/scheduler.hpp"

#include "edgefaas/object_url.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

namespace edgefaas {

namespace {

constexpr double kUnreachable = std::numeric_limits<double>::infinity();

std::vector<ResourceId> sorted_unique(std::vector<ResourceId> ids)
{
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

const ResourceRecord* find_record(std::span<const ResourceRecord> resources, ResourceId id)
{
    auto it = std::find_if(resources.begin(), resources.end(),
                           [&](const ResourceRecord& r) { return r.resource_id == id; });
    return it == resources.end() ? nullptr : &*it;
}

std::vector<ResourceId> tier_candidates(const FunctionSpec& fn, std::span<const ResourceId> candidates,
                                        std::span<const ResourceRecord> resources)
{
    std::vector<ResourceId> out;
    for (auto id : candidates) {
        const auto* record = find_record(resources, id);
        if (record != nullptr && record->tier() == fn.nodetype) {
            out.push_back(id);
        }
    }
    out = sorted_unique(std::move(out));
    if (out.empty()) {
        fail(Errc::NoTierCandidates,
             "no " + std::string(to_string(fn.nodetype)) + " candidate for " + fn.name);
    }
    return out;
}

} // namespace

void RttMatrix::set(ResourceId a, ResourceId b, double ms)
{
    if (!(ms >= 0.0)) {
        throw std::invalid_argument("rtt must be non-negative");
    }
    if (a == b) {
        return;
    }
    entries_[{std::min(a, b), std::max(a, b)}] = ms;
}

double RttMatrix::get(ResourceId a, ResourceId b) const noexcept
{
    if (a == b) {
        return 0.0;
    }
    auto it = entries_.find({std::min(a, b), std::max(a, b)});
    return it == entries_.end() ? kUnreachable : it->second;
}

bool RttMatrix::declared(ResourceId a, ResourceId b) const noexcept
{
    return a == b || entries_.count({std::min(a, b), std::max(a, b)}) != 0;
}

RttMatrix RttMatrix::scaled(double factor) const
{
    RttMatrix out;
    for (const auto& [key, ms] : entries_) {
        out.entries_[key] = ms * factor;
    }
    return out;
}

std::vector<ResourceId> filter_phase_one(const FunctionSpec& fn,
                                         std::span<const ResourceRecord> resources,
                                         const SnapshotTable& snapshots,
                                         std::span<const ResourceId> data_locations)
{
    std::set<ResourceId> data(data_locations.begin(), data_locations.end());
    std::vector<ResourceId> out;
    for (const auto& resource : resources) {
        auto snap = snapshots.find(resource.resource_id);
        if (snap == snapshots.end()) {
            continue;
        }
        if (fn.privacy &&
            (data.count(resource.resource_id) == 0 || resource.tier() != Tier::Iot)) {
            continue;
        }
        auto free = available(resource, snap->second);
        if (free.memory_free >= fn.memory_req && free.gpu_free >= fn.gpu_req && free.cpu_free > 0.0) {
            out.push_back(resource.resource_id);
        }
    }
    out = sorted_unique(std::move(out));
    if (out.empty()) {
        fail(Errc::NoCandidates, "no resource satisfies the requirements of " + fn.name);
    }
    return out;
}

std::vector<ResourceId> placement_anchors(const PlacementContext& ctx)
{
    if (ctx.function.affinity == AffinityType::Data) {
        return sorted_unique(ctx.data_locations);
    }
    std::vector<ResourceId> anchors;
    for (const auto& [dependency, ids] : ctx.dependency_placements) {
        anchors.insert(anchors.end(), ids.begin(), ids.end());
    }
    return sorted_unique(std::move(anchors));
}

std::vector<ResourceId> place_phase_two(const PlacementContext& ctx,
                                        std::span<const ResourceId> candidates,
                                        std::span<const ResourceRecord> resources)
{
    auto eligible = tier_candidates(ctx.function, candidates, resources);
    auto anchors = placement_anchors(ctx);
    if (anchors.empty()) {
        fail(Errc::NoAnchors, "nothing to place " + ctx.function.name + " near");
    }

    if (ctx.function.reduce == Reduce::Auto) {
        std::vector<ResourceId> chosen;
        for (auto anchor : anchors) {
            // eligible is ascending, so strict < keeps the smallest ID on ties.
            ResourceId best = eligible.front();
            double best_rtt = ctx.rtt.get(anchor, best);
            for (auto id : eligible) {
                auto rtt = ctx.rtt.get(anchor, id);
                if (rtt < best_rtt) {
                    best = id;
                    best_rtt = rtt;
                }
            }
            chosen.push_back(best);
        }
        return sorted_unique(std::move(chosen));
    }

    ResourceId best = eligible.front();
    double best_sum = kUnreachable;
    bool first = true;
    for (auto id : eligible) {
        double sum = 0.0;
        for (auto anchor : anchors) {
            sum += ctx.rtt.get(anchor, id);
        }
        if (first || sum < best_sum) {
            best = id;
            best_sum = sum;
            first = false;
        }
    }
    return {best};
}

std::vector<ResourceId> data_locations_of(const FunctionCreation& request)
{
    std::vector<ResourceId> out = request.data_locations;
    for (const auto& text : request.data_object_urls) {
        auto url = ObjectUrl::parse(text);
        if (!url) {
            fail(Errc::MalformedUrl, "bad object url " + text);
        }
        out.push_back(url->resource_id);
    }
    return sorted_unique(std::move(out));
}

std::vector<ResourceId> TwoPhasePolicy::schedule(const FunctionCreation& request,
                                                 const SchedulingView& view)
{
    const auto& fn = view.dag.function(request.function);
    auto locations = data_locations_of(request);
    auto candidates = filter_phase_one(fn, view.resources, view.snapshots, locations);

    PlacementContext ctx;
    ctx.function = fn;
    ctx.application = request.application;
    ctx.data_locations = locations;
    for (const auto& dep : fn.dependencies) {
        auto it = view.placements.find(dep);
        ctx.dependency_placements[dep] =
          it == view.placements.end() ? std::vector<ResourceId>{} : it->second;
    }
    ctx.rtt = view.rtt;
    return place_phase_two(ctx, candidates, view.resources);
}

std::vector<ResourceId> LowestLoadPolicy::schedule(const FunctionCreation& request,
                                                   const SchedulingView& view)
{
    const auto& fn = view.dag.function(request.function);
    auto candidates =
      filter_phase_one(fn, view.resources, view.snapshots, data_locations_of(request));
    auto eligible = tier_candidates(fn, candidates, view.resources);

    ResourceId best = eligible.front();
    double best_load = 2.0;
    for (auto id : eligible) {
        auto load = load_fraction(*find_record(view.resources, id), view.snapshots.at(id));
        if (load < best_load) {
            best = id;
            best_load = load;
        }
    }
    return {best};
}

PolicyRegistry PolicyRegistry::with_builtins()
{
    PolicyRegistry registry;
    registry.add("default", [] { return std::make_unique<TwoPhasePolicy>(); });
    registry.add("lowest-load", [] { return std::make_unique<LowestLoadPolicy>(); });
    return registry;
}

void PolicyRegistry::add(const std::string& name, Factory factory)
{
    factories_[name] = std::move(factory);
}

std::unique_ptr<SchedulingPolicy> PolicyRegistry::create(const std::string& name) const
{
    auto it = factories_.find(name);
    if (it == factories_.end()) {
        fail(Errc::UnknownPolicy, "no scheduling policy named " + name);
    }
    return it->second();
}

std::vector<std::string> PolicyRegistry::names() const
{
    std::vector<std::string> out;
    for (const auto& [name, factory] : factories_) {
        out.push_back(name);
    }
    return out;
}

} // namespace edgefaas
