#include "edgefaas/functions.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>
#include <sstream>

namespace edgefaas {

namespace {

std::vector<ResourceId> sorted_unique(std::vector<ResourceId> ids)
{
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

std::vector<ResourceId> without(const std::vector<ResourceId>& ids, const std::vector<ResourceId>& drop)
{
    std::vector<ResourceId> out;
    for (auto id : ids) {
        if (std::find(drop.begin(), drop.end(), id) == drop.end()) {
            out.push_back(id);
        }
    }
    return out;
}

std::string id_list(const std::vector<ResourceId>& ids)
{
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << (i ? "," : "") << ids[i];
    }
    return out.str();
}

} // namespace

std::string qualified_name(const std::string& application, const std::string& function)
{
    return application + "." + function;
}

std::optional<std::pair<std::string, std::string>> split_qualified(std::string_view qualified)
{
    auto dot = qualified.rfind('.');
    if (dot == std::string_view::npos) {
        return std::nullopt;
    }
    std::string app(qualified.substr(0, dot));
    std::string fn(qualified.substr(dot + 1));
    if (!valid_application_name(app) || !valid_function_name(fn)) {
        return std::nullopt;
    }
    return std::make_pair(app, fn);
}

FunctionService::FunctionService(MappingStore& store, Registry& registry, AppCatalog& catalog,
                                 FaasProvider& provider, MetricsProvider& metrics, RttSource rtt,
                                 PolicyRegistry policies, FunctionsConfig config, MonotonicClock clock)
  : store_(store)
  , registry_(registry)
  , catalog_(catalog)
  , provider_(provider)
  , metrics_(metrics)
  , rtt_(std::move(rtt))
  , policies_(std::move(policies))
  , config_(std::move(config))
  , clock_(std::move(clock))
{
    policies_.create(config_.policy);  // fail early on a bad name
    std::random_device rd;
    id_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

FunctionService::~FunctionService()
{
    std::lock_guard lock(async_mutex_);
    for (auto& [id, entry] : async_) {
        entry.future.wait();
    }
}

std::mutex& FunctionService::function_lock(const std::string& qualified)
{
    std::lock_guard lock(locks_mutex_);
    auto& slot = locks_[qualified];
    if (!slot) {
        slot = std::make_unique<std::mutex>();
    }
    return *slot;
}

SnapshotTable FunctionService::snapshots(const std::vector<ResourceRecord>& records) const
{
    SnapshotTable out;
    auto now = clock_();
    for (const auto& r : records) {
        try {
            out.emplace(r.resource_id, fetch_snapshot(metrics_, r, now, config_.staleness_bound));
        } catch (const Error& e) {
            // No snapshot means phase one skips the resource.
            spdlog::warn("resource {} excluded from scheduling: {}", r.resource_id, e.what());
        }
    }
    return out;
}

std::optional<std::vector<ResourceId>> FunctionService::candidates(const std::string& application,
                                                                   const std::string& function) const
{
    auto value = store_.get(maps::kCandidateResource, qualified_name(application, function));
    if (!value) {
        return std::nullopt;
    }
    return value->get<std::vector<ResourceId>>();
}

std::vector<ResourceId> FunctionService::schedule(const FunctionCreation& request)
{
    auto dag = catalog_.get(request.application);
    dag.function(request.function);
    SchedulingView view{dag, registry_.records(), {}, {}, {}};
    view.snapshots = snapshots(view.resources);
    view.rtt = rtt_(view.resources);
    for (const auto& [name, spec] : dag.nodes) {
        if (auto ids = candidates(request.application, name)) {
            view.placements[name] = *ids;
        }
    }
    auto policy = policies_.create(config_.policy);
    return sorted_unique(policy->schedule(request, view));
}

std::vector<ResourceId> FunctionService::deploy_function(const FunctionCreation& request,
                                                         const DeploymentPackage& package)
{
    auto qualified = qualified_name(request.application, request.function);
    std::lock_guard guard(function_lock(qualified));

    auto scheduled = schedule(request);
    if (scheduled.empty()) {
        fail(Errc::NoCandidates, "policy placed " + qualified + " nowhere");
    }
    auto previous = candidates(request.application, request.function).value_or(std::vector<ResourceId>{});

    // Record the placement first so the resources count as busy while we deploy.
    auto pending = previous;
    pending.insert(pending.end(), scheduled.begin(), scheduled.end());
    store_.put(maps::kCandidateResource, qualified, sorted_unique(pending));

    std::vector<ResourceId> failed;
    for (auto id : scheduled) {
        auto record = registry_.find(id);
        try {
            if (!record) {
                fail(Errc::UnknownResource, "resource " + std::to_string(id) + " is not registered");
            }
            provider_.deploy(*record, qualified, package);
        } catch (const Error& e) {
            spdlog::warn("deploying {} on resource {} failed: {}", qualified, id, e.what());
            failed.push_back(id);
        }
    }
    // Placements the new schedule no longer wants.
    std::vector<ResourceId> kept;
    for (auto id : without(previous, scheduled)) {
        auto record = registry_.find(id);
        try {
            if (record) {
                provider_.remove(*record, qualified);
            }
        } catch (const Error& e) {
            spdlog::warn("retiring {} on resource {} failed: {}", qualified, id, e.what());
            kept.push_back(id);
        }
    }
    // A failed redeploy may leave the old copy running; retire it or keep
    // tracking it so the set matches what the backends hold.
    for (auto id : failed) {
        if (std::find(previous.begin(), previous.end(), id) == previous.end()) {
            continue;
        }
        auto record = registry_.find(id);
        try {
            if (record) {
                provider_.remove(*record, qualified);
            }
        } catch (const Error&) {
            kept.push_back(id);
        }
    }
    auto final_set = without(scheduled, failed);
    final_set.insert(final_set.end(), kept.begin(), kept.end());
    final_set = sorted_unique(std::move(final_set));
    if (final_set.empty()) {
        store_.erase(maps::kCandidateResource, qualified);
    } else {
        store_.put(maps::kCandidateResource, qualified, final_set);
    }
    if (!failed.empty()) {
        fail(Errc::PartialDeployFailure, "deploying " + qualified + " failed on " + id_list(failed), failed);
    }
    spdlog::info("deployed {} on [{}]", qualified, id_list(final_set));
    return final_set;
}

void FunctionService::delete_function(const std::string& application, const std::string& function)
{
    catalog_.get(application).function(function);
    auto qualified = qualified_name(application, function);
    std::lock_guard guard(function_lock(qualified));
    auto ids = candidates(application, function);
    if (!ids) {
        fail(Errc::UnknownFunction, qualified + " is not deployed");
    }
    std::vector<ResourceId> failed;
    for (auto id : *ids) {
        auto record = registry_.find(id);
        try {
            if (!record) {
                fail(Errc::UnknownResource, "resource " + std::to_string(id) + " is not registered");
            }
            provider_.remove(*record, qualified);
        } catch (const Error& e) {
            spdlog::warn("removing {} from resource {} failed: {}", qualified, id, e.what());
            failed.push_back(id);
        }
    }
    if (failed.empty()) {
        store_.erase(maps::kCandidateResource, qualified);
        return;
    }
    store_.put(maps::kCandidateResource, qualified, failed);
    fail(Errc::PartialDeleteFailure, qualified + " is still deployed on " + id_list(failed), failed);
}

std::vector<ResourceDescription> FunctionService::get_function(const std::string& application,
                                                               const std::string& function)
{
    catalog_.get(application).function(function);
    auto qualified = qualified_name(application, function);
    auto ids = candidates(application, function);
    if (!ids) {
        fail(Errc::UnknownFunction, qualified + " is not deployed");
    }
    std::vector<ResourceDescription> out;
    for (auto id : *ids) {
        ResourceDescription d;
        d.resource_id = id;
        try {
            auto record = registry_.get(id);
            d.description = provider_.describe(record, qualified);
        } catch (const Error& e) {
            d.error = e.what();
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<FunctionListing> FunctionService::list_functions(const std::string& application)
{
    auto dag = catalog_.get(application);
    std::vector<FunctionListing> out;
    for (const auto& name : topo_order(dag)) {
        FunctionListing listing;
        listing.function = name;
        if (candidates(application, name)) {
            listing.deployed = true;
            listing.resources = get_function(application, name);
        }
        out.push_back(std::move(listing));
    }
    return out;
}

std::string FunctionService::next_invocation_id()
{
    std::lock_guard lock(id_mutex_);
    std::ostringstream out;
    out << "inv-" << std::hex << id_salt_ << "-" << std::dec << ++id_counter_;
    return out.str();
}

InvocationResult FunctionService::dispatch(const std::string& application, const std::string& function,
                                           const std::string& payload, bool invoke_one,
                                           const std::string& invocation_id, bool sync,
                                           std::optional<ResourceId> only)
{
    catalog_.get(application).function(function);
    auto qualified = qualified_name(application, function);
    auto ids = candidates(application, function);
    if (!ids || ids->empty()) {
        fail(Errc::UnknownFunction, qualified + " is not deployed");
    }

    std::vector<ResourceId> targets = *ids;
    if (only) {
        targets = {*only};
    } else if (invoke_one) {
        std::vector<ResourceRecord> records;
        for (auto id : *ids) {
            if (auto r = registry_.find(id)) {
                records.push_back(*r);
            }
        }
        auto snaps = snapshots(records);
        ResourceId best = ids->front();
        double best_load = std::numeric_limits<double>::infinity();
        for (const auto& r : records) {  // ascending IDs, strict < keeps the smallest on ties
            auto snap = snaps.find(r.resource_id);
            double load = snap == snaps.end() ? std::numeric_limits<double>::infinity()
                                              : load_fraction(r, snap->second);
            if (load < best_load) {
                best = r.resource_id;
                best_load = load;
            }
        }
        targets = {best};
    }

    InvocationResult result;
    result.invocation_id = invocation_id;
    std::vector<ResourceId> failed;
    std::string first_error;
    for (auto id : targets) {
        InvocationEnvelope envelope{payload, id, application, function, invocation_id, sync};
        try {
            auto record = registry_.find(id);
            if (!record) {
                fail(Errc::UnknownResource, "resource " + std::to_string(id) + " is not registered");
            }
            auto out = provider_.invoke(*record, qualified, to_json(envelope).dump());
            result.outcomes.push_back({id, std::move(out.output), out.latency_seconds});
        } catch (const Error& e) {
            failed.push_back(id);
            if (first_error.empty()) {
                first_error = e.what();
            }
        }
    }
    if (!failed.empty()) {
        fail(Errc::InvokeFailure, qualified + " failed on resource " + id_list(failed) + ": " + first_error,
             failed);
    }
    return result;
}

InvocationResult FunctionService::invoke(const std::string& application, const std::string& function,
                                         const std::string& payload, bool invoke_one)
{
    return dispatch(application, function, payload, invoke_one, next_invocation_id(), true);
}

void FunctionService::purge_async(double now)
{
    for (auto it = async_.begin(); it != async_.end();) {
        bool ready = it->second.future.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
        if (ready && now - it->second.created > config_.async_ttl) {
            it = async_.erase(it);
        } else {
            ++it;
        }
    }
}

std::string FunctionService::invoke_async(const std::string& application, const std::string& function,
                                          const std::string& payload, bool invoke_one)
{
    // Unknown names fail synchronously, before an ID is handed out.
    catalog_.get(application).function(function);
    if (!candidates(application, function)) {
        fail(Errc::UnknownFunction, qualified_name(application, function) + " is not deployed");
    }
    auto id = next_invocation_id();
    auto future = std::async(std::launch::async, [this, application, function, payload, invoke_one, id] {
                      return dispatch(application, function, payload, invoke_one, id, false);
                  }).share();
    std::lock_guard lock(async_mutex_);
    purge_async(clock_());
    async_.emplace(id, AsyncEntry{future, clock_()});
    return id;
}

AsyncStatus FunctionService::poll(const std::string& invocation_id)
{
    std::shared_future<InvocationResult> future;
    {
        std::lock_guard lock(async_mutex_);
        purge_async(clock_());
        auto it = async_.find(invocation_id);
        if (it == async_.end()) {
            fail(Errc::UnknownInvocation, "no invocation " + invocation_id);
        }
        future = it->second.future;
    }
    AsyncStatus status;
    if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) {
        return status;
    }
    try {
        status.result = future.get();
        status.state = AsyncState::Done;
    } catch (const Error& e) {
        status.state = AsyncState::Failed;
        status.error = e.what();
        status.failed_resources = e.resource_ids();
    } catch (const std::exception& e) {
        status.state = AsyncState::Failed;
        status.error = e.what();
    }
    return status;
}

ChainOutcome FunctionService::chain_invoke(const InvocationEnvelope& completed,
                                           const std::string& next_function,
                                           const std::vector<std::string>& output_urls)
{
    auto dag = catalog_.get(completed.application);
    dag.function(completed.function);
    auto successors = dag.successors(completed.function);
    if (std::find(successors.begin(), successors.end(), next_function) == successors.end()) {
        fail(Errc::NotASuccessor, next_function + " does not follow " + completed.function);
    }
    const auto& next = dag.function(next_function);
    auto next_ids = candidates(completed.application, next_function);
    if (!next_ids || next_ids->empty()) {
        fail(Errc::UnknownFunction, qualified_name(completed.application, next_function) + " is not deployed");
    }

    auto rtt = rtt_(registry_.records());
    auto route = [&](ResourceId from) {
        ResourceId best = next_ids->front();
        for (auto id : *next_ids) {
            if (rtt.get(from, id) < rtt.get(from, best)) {
                best = id;
            }
        }
        return best;
    };
    auto target = route(completed.resource_id);

    using Source = std::pair<std::string, ResourceId>;
    std::set<Source> expected;
    for (const auto& dep : next.dependencies) {
        for (auto id : candidates(completed.application, dep).value_or(std::vector<ResourceId>{})) {
            if (route(id) == target) {
                expected.insert({dep, id});
            }
        }
    }
    Source source{completed.function, completed.resource_id};
    if (expected.count(source) == 0) {
        fail(Errc::NotASuccessor, completed.function + " on resource " + std::to_string(completed.resource_id) +
                                    " is not a deployed predecessor of " + next_function);
    }

    json inputs = json::array();
    json sources = json::array();
    ChainOutcome outcome;
    outcome.target = target;
    {
        std::lock_guard lock(barrier_mutex_);
        auto& rounds = barriers_[{completed.application, next_function, target}];
        auto now = clock_();
        std::vector<ResourceId> missing;
        while (!rounds.empty() && now - rounds.front().opened > config_.barrier_timeout) {
            for (const auto& [fn, id] : expected) {
                if (rounds.front().seen.count({fn, id}) == 0) {
                    missing.push_back(id);
                }
            }
            rounds.pop_front();
        }
        if (!missing.empty()) {
            fail(Errc::BarrierTimeout,
                 "round of " + next_function + " on resource " + std::to_string(target) +
                   " timed out waiting for " + id_list(sorted_unique(missing)),
                 sorted_unique(missing));
        }

        auto slot = std::find_if(rounds.begin(), rounds.end(),
                                 [&](const Round& r) { return r.seen.count(source) == 0; });
        if (slot == rounds.end()) {
            rounds.push_back(Round{now, {}, {}});
            slot = std::prev(rounds.end());
        }
        slot->seen.insert(source);
        slot->inputs.push_back(json{{"function", source.first},
                                    {"resource_id", source.second},
                                    {"invocation_id", completed.invocation_id},
                                    {"urls", output_urls}});
        outcome.waiting_for = expected.size() -
                              static_cast<std::size_t>(std::count_if(expected.begin(), expected.end(),
                                                                     [&](const Source& s) {
                                                                         return slot->seen.count(s) != 0;
                                                                     }));

        // A later round only holds sources the earlier ones already have,
        // so only the front can be complete.
        auto& front = rounds.front();
        bool complete = std::includes(front.seen.begin(), front.seen.end(), expected.begin(), expected.end());
        if (!complete) {
            return outcome;
        }
        auto contributions = std::move(front.inputs);
        rounds.pop_front();
        std::sort(contributions.begin(), contributions.end(), [](const json& a, const json& b) {
            return std::make_pair(a.at("function").get<std::string>(), a.at("resource_id").get<ResourceId>()) <
                   std::make_pair(b.at("function").get<std::string>(), b.at("resource_id").get<ResourceId>());
        });
        for (auto& c : contributions) {
            for (const auto& url : c.at("urls")) {
                inputs.push_back(url);
            }
            c.erase("urls");
            sources.push_back(std::move(c));
        }
    }

    json payload{{"inputs", inputs}, {"sources", sources}};
    outcome.fired = true;
    outcome.waiting_for = 0;
    outcome.result = dispatch(completed.application, next_function, payload.dump(), false, next_invocation_id(),
                              true, target);
    return outcome;
}

} // namespace edgefaas
