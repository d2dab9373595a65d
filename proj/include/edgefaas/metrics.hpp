#pragma once

#include "edgefaas/registry.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace edgefaas {

// Seconds on a monotonic clock. Providers and the staleness check must agree
// on the clock, so it is injected.
using MonotonicClock = std::function<double()>;

MonotonicClock steady_seconds();

struct MetricsSnapshot {
    ResourceId resource_id = 0;
    double cpu_used = 0.0;              // logical cores
    std::uint64_t memory_used = 0;      // bytes
    double io_bandwidth_used = 0.0;     // bytes/second
    double gpu_used = 0.0;              // GPUs
    std::vector<double> per_node_load;  // fractions in [0,1], one per node
    double timestamp = 0.0;
};

struct Availability {
    std::uint64_t memory_free = 0;
    double cpu_free = 0.0;
    double gpu_free = 0.0;
};

// Aggregate capacity minus usage, clamped at zero.
Availability available(const ResourceRecord& resource, const MetricsSnapshot& snap);

// CPU utilisation in [0,1]; the load measure used to pick one of several
// replicas.
double load_fraction(const ResourceRecord& resource, const MetricsSnapshot& snap);

class MetricsProvider {
public:
    virtual ~MetricsProvider() = default;

    // Throws Error(MetricsUnavailable) when the endpoint cannot be reached.
    virtual MetricsSnapshot fetch(const ResourceRecord& resource) = 0;
};

// Fetches and rejects samples older than `staleness_bound` seconds.
MetricsSnapshot fetch_snapshot(MetricsProvider& provider, const ResourceRecord& resource,
                               double now, double staleness_bound);

// In-process table of configured loads. Resources without an entry report an
// idle snapshot.
class SimulatedMetricsProvider final : public MetricsProvider {
public:
    explicit SimulatedMetricsProvider(MonotonicClock clock = steady_seconds());

    MetricsSnapshot fetch(const ResourceRecord& resource) override;

    void set_load(ResourceId id, double cpu_used, std::uint64_t memory_used, double gpu_used = 0.0,
                  double io_bandwidth_used = 0.0);
    void set_unreachable(ResourceId id, bool unreachable = true);
    // Pins the sample timestamp, e.g. to exercise staleness.
    void set_sample_time(ResourceId id, double timestamp);
    void clear();

private:
    struct Entry {
        double cpu_used = 0.0;
        std::uint64_t memory_used = 0;
        double gpu_used = 0.0;
        double io_bandwidth_used = 0.0;
        std::optional<double> timestamp;
    };

    MonotonicClock clock_;
    std::mutex mutex_;
    std::map<ResourceId, Entry> loads_;
    std::set<ResourceId> unreachable_;
};

// Prometheus instant queries against the resource's `prometheus` endpoint.
class PrometheusMetricsProvider final : public MetricsProvider {
public:
    struct Queries {
        std::string cpu_used = "sum(rate(node_cpu_seconds_total{mode!=\"idle\"}[1m]))";
        std::string memory_used = "sum(node_memory_MemTotal_bytes - node_memory_MemAvailable_bytes)";
        std::string io_bandwidth_used =
          "sum(rate(node_disk_read_bytes_total[1m]) + rate(node_disk_written_bytes_total[1m]))";
        std::string gpu_used = "sum(DCGM_FI_DEV_GPU_UTIL) / 100";
        std::string per_node_load =
          "1 - avg by (instance) (rate(node_cpu_seconds_total{mode=\"idle\"}[1m]))";
    };

    explicit PrometheusMetricsProvider(Queries queries, MonotonicClock clock = steady_seconds(),
                                       std::chrono::milliseconds timeout = std::chrono::seconds(2));

    MetricsSnapshot fetch(const ResourceRecord& resource) override;

private:
    Queries queries_;
    MonotonicClock clock_;
    std::chrono::milliseconds timeout_;
};

} // namespace edgefaas
