#include "edgefaas/metrics.hpp"

#include <algorithm>

namespace edgefaas {

MonotonicClock steady_seconds()
{
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

Availability available(const ResourceRecord& resource, const MetricsSnapshot& snap)
{
    if (resource.resource_id != snap.resource_id) {
        fail(Errc::MismatchedResource,
             "snapshot of resource " + std::to_string(snap.resource_id) + " used for resource " +
               std::to_string(resource.resource_id));
    }
    Availability out;
    auto memory_total = resource.total_memory();
    out.memory_free = snap.memory_used >= memory_total ? 0 : memory_total - snap.memory_used;
    out.cpu_free = std::max(0.0, resource.total_cpu() - std::max(0.0, snap.cpu_used));
    out.gpu_free = std::max(0.0, resource.total_gpu() - std::max(0.0, snap.gpu_used));
    return out;
}

double load_fraction(const ResourceRecord& resource, const MetricsSnapshot& snap)
{
    return std::clamp(snap.cpu_used / resource.total_cpu(), 0.0, 1.0);
}

MetricsSnapshot fetch_snapshot(MetricsProvider& provider, const ResourceRecord& resource,
                               double now, double staleness_bound)
{
    auto snap = provider.fetch(resource);
    if (now - snap.timestamp > staleness_bound) {
        fail(Errc::MetricsUnavailable,
             "metrics of resource " + std::to_string(resource.resource_id) + " are stale",
             {resource.resource_id});
    }
    return snap;
}

SimulatedMetricsProvider::SimulatedMetricsProvider(MonotonicClock clock)
  : clock_(std::move(clock))
{
}

MetricsSnapshot SimulatedMetricsProvider::fetch(const ResourceRecord& resource)
{
    std::lock_guard lock(mutex_);
    if (unreachable_.count(resource.resource_id) != 0) {
        fail(Errc::MetricsUnavailable,
             "metrics endpoint " + resource.prometheus + " unreachable", {resource.resource_id});
    }
    Entry entry;
    if (auto it = loads_.find(resource.resource_id); it != loads_.end()) {
        entry = it->second;
    }
    MetricsSnapshot snap;
    snap.resource_id = resource.resource_id;
    snap.cpu_used = std::min(entry.cpu_used, resource.total_cpu());
    snap.memory_used = std::min(entry.memory_used, resource.total_memory());
    snap.gpu_used = std::min(entry.gpu_used, resource.total_gpu());
    snap.io_bandwidth_used = entry.io_bandwidth_used;
    // Load spread evenly over the nodes.
    snap.per_node_load.assign(resource.node, load_fraction(resource, snap));
    snap.timestamp = entry.timestamp.value_or(clock_());
    return snap;
}

void SimulatedMetricsProvider::set_load(ResourceId id, double cpu_used, std::uint64_t memory_used,
                                        double gpu_used, double io_bandwidth_used)
{
    std::lock_guard lock(mutex_);
    auto& entry = loads_[id];
    entry.cpu_used = cpu_used;
    entry.memory_used = memory_used;
    entry.gpu_used = gpu_used;
    entry.io_bandwidth_used = io_bandwidth_used;
}

void SimulatedMetricsProvider::set_unreachable(ResourceId id, bool unreachable)
{
    std::lock_guard lock(mutex_);
    if (unreachable) {
        unreachable_.insert(id);
    } else {
        unreachable_.erase(id);
    }
}

void SimulatedMetricsProvider::set_sample_time(ResourceId id, double timestamp)
{
    std::lock_guard lock(mutex_);
    loads_[id].timestamp = timestamp;
}

void SimulatedMetricsProvider::clear()
{
    std::lock_guard lock(mutex_);
    loads_.clear();
    unreachable_.clear();
}

} // namespace edgefaas
