#pragma once

#include "edgefaas/appmodel.hpp"
#include "edgefaas/backends.hpp"
#include "edgefaas/envelope.hpp"
#include "edgefaas/mapping_store.hpp"
#include "edgefaas/metrics.hpp"
#include "edgefaas/registry.hpp"
#include "edgefaas/scheduler.hpp"

#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace edgefaas {

// "application.function"
std::string qualified_name(const std::string& application, const std::string& function);
// Splits on the last dot. Returns nullopt when either half is invalid.
std::optional<std::pair<std::string, std::string>> split_qualified(std::string_view qualified);

// RTTs between the given records, in registry-ID space.
using RttSource = std::function<RttMatrix(const std::vector<ResourceRecord>&)>;

struct FunctionsConfig {
    std::string policy = "default";
    double staleness_bound = 60.0;
    double async_ttl = 3600.0;
    double barrier_timeout = 300.0;
};

struct ResourceDescription {
    ResourceId resource_id = 0;
    std::optional<FunctionDescription> description;
    std::string error;  // set when the backend could not describe
};

struct FunctionListing {
    std::string function;
    bool deployed = false;
    std::vector<ResourceDescription> resources;
};

struct DispatchOutcome {
    ResourceId resource_id = 0;
    std::string output;
    double latency_seconds = 0.0;
};

struct InvocationResult {
    std::string invocation_id;
    std::vector<DispatchOutcome> outcomes;  // ascending resource ID
};

enum class AsyncState { Pending, Done, Failed };

struct AsyncStatus {
    AsyncState state = AsyncState::Pending;
    std::optional<InvocationResult> result;
    std::string error;
    std::vector<ResourceId> failed_resources;
};

struct ChainOutcome {
    bool fired = false;
    ResourceId target = 0;
    std::size_t waiting_for = 0;  // completions still missing in this round
    std::optional<InvocationResult> result;
};

class FunctionService {
public:
    FunctionService(MappingStore& store, Registry& registry, AppCatalog& catalog, FaasProvider& provider,
                    MetricsProvider& metrics, RttSource rtt, PolicyRegistry policies,
                    FunctionsConfig config = {}, MonotonicClock clock = steady_seconds());
    ~FunctionService();

    // Runs the configured policy without deploying.
    std::vector<ResourceId> schedule(const FunctionCreation& request);

    // Schedules, deploys on every candidate and records the CandidateSet.
    // Resources that fail are dropped from the set and reported through
    // Error(PartialDeployFailure). Returns the resulting set.
    std::vector<ResourceId> deploy_function(const FunctionCreation& request,
                                            const DeploymentPackage& package);

    // Throws Error(PartialDeleteFailure) listing the resources that kept it.
    void delete_function(const std::string& application, const std::string& function);

    std::vector<ResourceDescription> get_function(const std::string& application,
                                                  const std::string& function);
    // Every node of the stored DAG in topological order.
    std::vector<FunctionListing> list_functions(const std::string& application);

    std::optional<std::vector<ResourceId>> candidates(const std::string& application,
                                                      const std::string& function) const;

    // Dispatches to every candidate, or to the least loaded one. Throws
    // Error(InvokeFailure) naming the resources that failed.
    InvocationResult invoke(const std::string& application, const std::string& function,
                            const std::string& payload, bool invoke_one = false);
    // Returns the invocation ID at once; poll() reports the result.
    std::string invoke_async(const std::string& application, const std::string& function,
                             const std::string& payload, bool invoke_one = false);
    // Throws Error(UnknownInvocation) for unknown or expired IDs.
    AsyncStatus poll(const std::string& invocation_id);

    // Reports that `completed` finished and hands its outputs to a successor.
    // The successor instance nearest to the completing resource is invoked
    // once every predecessor instance routed to it has completed in the
    // current round. Throws Error(NotASuccessor), Error(BarrierTimeout).
    ChainOutcome chain_invoke(const InvocationEnvelope& completed, const std::string& next_function,
                              const std::vector<std::string>& output_urls);

    const FunctionsConfig& config() const noexcept { return config_; }

private:
    struct Round {
        double opened = 0.0;
        std::set<std::pair<std::string, ResourceId>> seen;
        std::vector<json> inputs;
    };
    using BarrierKey = std::tuple<std::string, std::string, ResourceId>;

    struct AsyncEntry {
        std::shared_future<InvocationResult> future;
        double created = 0.0;
    };

    SnapshotTable snapshots(const std::vector<ResourceRecord>& records) const;
    std::mutex& function_lock(const std::string& qualified);
    InvocationResult dispatch(const std::string& application, const std::string& function,
                              const std::string& payload, bool invoke_one, const std::string& invocation_id,
                              bool sync, std::optional<ResourceId> only = std::nullopt);
    std::string next_invocation_id();
    void purge_async(double now);

    MappingStore& store_;
    Registry& registry_;
    AppCatalog& catalog_;
    FaasProvider& provider_;
    MetricsProvider& metrics_;
    RttSource rtt_;
    PolicyRegistry policies_;
    FunctionsConfig config_;
    MonotonicClock clock_;

    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;

    std::mutex async_mutex_;
    std::map<std::string, AsyncEntry> async_;

    std::mutex barrier_mutex_;
    std::map<BarrierKey, std::deque<Round>> barriers_;

    std::mutex id_mutex_;
    std::uint64_t id_counter_ = 0;
    std::uint64_t id_salt_ = 0;
};

} // namespace edgefaas
