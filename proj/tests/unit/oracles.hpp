#pragma once

// Reference models the property tests and the acceptance run compare against.
// They are written from the documented rules, not from the implementation.

#include "edgefaas/harness.hpp"
#include "edgefaas/object_url.hpp"
#include "edgefaas/platform.hpp"
#include "edgefaas/scheduler.hpp"

#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace testing {

// ---- scheduling ------------------------------------------------------------

struct ScheduleInstance {
    edgefaas::FunctionSpec fn;
    std::vector<edgefaas::ResourceRecord> resources;
    edgefaas::SnapshotTable snapshots;
    std::vector<edgefaas::ResourceId> data_locations;
    std::map<std::string, std::vector<edgefaas::ResourceId>> dependency_placements;
    // Integer milliseconds so that sums and scalings stay exact.
    std::map<std::pair<edgefaas::ResourceId, edgefaas::ResourceId>, double> rtt;

    edgefaas::RttMatrix matrix(double scale = 1.0) const
    {
        edgefaas::RttMatrix m;
        for (const auto& [key, ms] : rtt) {
            m.set(key.first, key.second, ms * scale);
        }
        return m;
    }

    edgefaas::PlacementContext context(double scale = 1.0) const
    {
        edgefaas::PlacementContext ctx;
        ctx.function = fn;
        ctx.application = "demo";
        ctx.data_locations = data_locations;
        ctx.dependency_placements = dependency_placements;
        ctx.rtt = matrix(scale);
        return ctx;
    }
};

inline ScheduleInstance random_schedule_instance(std::mt19937_64& rng)
{
    using namespace edgefaas;
    ScheduleInstance inst;
    const char* tiers[] = {"iot", "edge", "cloud", "iot", "edge", "fog"};
    std::size_t n = 1 + rng() % 8;
    std::vector<ResourceId> ids;
    // Non-contiguous IDs exercise the tie-break on real IDs.
    ResourceId next = static_cast<ResourceId>(rng() % 3);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = sample_record(tiers[rng() % 6], static_cast<unsigned>(i));
        r.resource_id = next;
        next += 1 + static_cast<ResourceId>(rng() % 3);
        r.node = 1 + static_cast<std::uint32_t>(rng() % 3);
        r.memory = (1 + rng() % 8) << 30;
        r.cpu = 1 + static_cast<std::uint32_t>(rng() % 4);
        r.gpunode = static_cast<std::uint32_t>(rng() % (r.node + 1));
        r.gpu = r.gpunode ? static_cast<std::uint32_t>(rng() % 3) : 0;
        ids.push_back(r.resource_id);
        if (rng() % 8 != 0) {
            MetricsSnapshot s;
            s.resource_id = r.resource_id;
            // Some resources are fully busy on CPU, some out of memory.
            s.cpu_used = rng() % 4 == 0 ? r.total_cpu() : static_cast<double>(rng() % (r.cpu * r.node));
            s.memory_used = rng() % 5 == 0 ? r.total_memory() : (rng() % (r.memory * r.node >> 30)) << 30;
            s.gpu_used = static_cast<double>(rng() % (static_cast<std::uint64_t>(r.total_gpu()) + 1));
            s.per_node_load.assign(r.node, 0.0);
            inst.snapshots[r.resource_id] = s;
        }
        inst.resources.push_back(r);
    }

    auto& fn = inst.fn;
    fn.name = "f";
    fn.nodetype = static_cast<Tier>(rng() % 3);
    fn.reduce = rng() % 2 ? Reduce::One : Reduce::Auto;
    fn.affinity = rng() % 2 ? AffinityType::Function : AffinityType::Data;
    fn.memory_req = rng() % 3 == 0 ? 0 : (rng() % 10) << 30;
    fn.gpu_req = rng() % 3 == 0 ? static_cast<std::uint32_t>(rng() % 4) : 0;
    fn.privacy = fn.nodetype == Tier::Iot && rng() % 3 == 0;

    auto pick = [&]() {
        std::vector<ResourceId> out;
        for (auto id : ids) {
            if (rng() % 3 == 0) {
                out.push_back(id);
            }
        }
        if (rng() % 10 == 0) {
            out.push_back(next + 5);  // a location that is not registered
        }
        return out;
    };
    inst.data_locations = pick();
    if (fn.affinity == AffinityType::Function) {
        fn.dependencies = {"g", "h"};
        inst.dependency_placements["g"] = pick();
        inst.dependency_placements["h"] = pick();
    }

    std::vector<ResourceId> everyone = ids;
    everyone.push_back(next + 5);
    for (std::size_t i = 0; i < everyone.size(); ++i) {
        for (std::size_t j = i + 1; j < everyone.size(); ++j) {
            if (rng() % 6 != 0) {  // some pairs stay undeclared
                // Small range so ties are common.
                inst.rtt[{everyone[i], everyone[j]}] = static_cast<double>(rng() % 12);
            }
        }
    }
    return inst;
}

inline double oracle_rtt(const ScheduleInstance& inst, edgefaas::ResourceId a, edgefaas::ResourceId b)
{
    if (a == b) {
        return 0.0;
    }
    auto it = inst.rtt.find({std::min(a, b), std::max(a, b)});
    return it == inst.rtt.end() ? std::numeric_limits<double>::infinity() : it->second;
}

// Phase one by direct predicate evaluation; nullopt means NoCandidates.
inline std::optional<std::vector<edgefaas::ResourceId>> oracle_phase_one(const ScheduleInstance& inst)
{
    using namespace edgefaas;
    std::vector<ResourceId> out;
    for (const auto& r : inst.resources) {
        auto snap = inst.snapshots.find(r.resource_id);
        if (snap == inst.snapshots.end()) {
            continue;
        }
        if (inst.fn.privacy) {
            bool local = std::count(inst.data_locations.begin(), inst.data_locations.end(), r.resource_id) > 0;
            if (!local || r.name != "iot") {
                continue;
            }
        }
        double mem_total = static_cast<double>(r.memory) * r.node;
        double mem_free = std::max(0.0, mem_total - static_cast<double>(snap->second.memory_used));
        double cpu_free = std::max(0.0, static_cast<double>(r.cpu) * r.node - snap->second.cpu_used);
        double gpu_free = std::max(0.0, static_cast<double>(r.gpu) * r.gpunode - snap->second.gpu_used);
        if (mem_free >= static_cast<double>(inst.fn.memory_req) && gpu_free >= inst.fn.gpu_req && cpu_free > 0) {
            out.push_back(r.resource_id);
        }
    }
    std::sort(out.begin(), out.end());
    if (out.empty()) {
        return std::nullopt;
    }
    return out;
}

enum class PhaseTwoFailure { None, NoTierCandidates, NoAnchors };

struct PhaseTwoAnswer {
    PhaseTwoFailure failure = PhaseTwoFailure::None;
    std::vector<edgefaas::ResourceId> placement;
};

// Phase two by exhaustive enumeration: every eligible subset is tested
// against the defining property and exactly one must qualify.
inline PhaseTwoAnswer oracle_phase_two(const ScheduleInstance& inst, const std::vector<edgefaas::ResourceId>& candidates)
{
    using namespace edgefaas;
    PhaseTwoAnswer answer;
    std::vector<ResourceId> eligible;
    for (auto id : candidates) {
        for (const auto& r : inst.resources) {
            if (r.resource_id == id && tier_from_name(r.name) == inst.fn.nodetype) {
                eligible.push_back(id);
            }
        }
    }
    std::sort(eligible.begin(), eligible.end());
    if (eligible.empty()) {
        answer.failure = PhaseTwoFailure::NoTierCandidates;
        return answer;
    }
    std::set<ResourceId> anchors;
    if (inst.fn.affinity == AffinityType::Data) {
        anchors.insert(inst.data_locations.begin(), inst.data_locations.end());
    } else {
        for (const auto& [dep, ids] : inst.dependency_placements) {
            anchors.insert(ids.begin(), ids.end());
        }
    }
    if (anchors.empty()) {
        answer.failure = PhaseTwoFailure::NoAnchors;
        return answer;
    }

    // "x is preferred to y for anchor a": smaller rtt, then smaller id.
    auto nearest_is = [&](ResourceId a, ResourceId x) {
        for (auto y : eligible) {
            auto rx = oracle_rtt(inst, a, x);
            auto ry = oracle_rtt(inst, a, y);
            if (ry < rx || (ry == rx && y < x)) {
                return false;
            }
        }
        return true;
    };
    auto sum_of = [&](ResourceId x) {
        double s = 0.0;
        for (auto a : anchors) {
            s += oracle_rtt(inst, a, x);
        }
        return s;
    };

    std::vector<std::vector<ResourceId>> qualifying;
    for (std::uint32_t mask = 1; mask < (1u << eligible.size()); ++mask) {
        std::vector<ResourceId> subset;
        for (std::size_t i = 0; i < eligible.size(); ++i) {
            if (mask & (1u << i)) {
                subset.push_back(eligible[i]);
            }
        }
        bool ok = true;
        if (inst.fn.reduce == Reduce::Auto) {
            // Every anchor's nearest is in the subset, and every member is some anchor's nearest.
            for (auto a : anchors) {
                ok = ok && std::any_of(subset.begin(), subset.end(), [&](ResourceId x) { return nearest_is(a, x); });
            }
            for (auto x : subset) {
                ok = ok && std::any_of(anchors.begin(), anchors.end(), [&](ResourceId a) { return nearest_is(a, x); });
            }
        } else {
            ok = subset.size() == 1;
            if (ok) {
                auto x = subset[0];
                for (auto y : eligible) {
                    auto sx = sum_of(x);
                    auto sy = sum_of(y);
                    if (sy < sx || (sy == sx && y < x)) {
                        ok = false;
                    }
                }
            }
        }
        if (ok) {
            qualifying.push_back(subset);
        }
    }
    if (qualifying.size() == 1) {
        answer.placement = qualifying[0];
    }
    return answer;
}

struct ScheduleOutcome {
    std::optional<edgefaas::Errc> error;
    std::vector<edgefaas::ResourceId> phase_one;
    std::vector<edgefaas::ResourceId> placement;

    friend bool operator==(const ScheduleOutcome&, const ScheduleOutcome&) = default;
};

inline ScheduleOutcome run_two_phase(const ScheduleInstance& inst, double scale = 1.0)
{
    using namespace edgefaas;
    ScheduleOutcome out;
    try {
        out.phase_one = filter_phase_one(inst.fn, inst.resources, inst.snapshots, inst.data_locations);
        out.placement = place_phase_two(inst.context(scale), out.phase_one, inst.resources);
    } catch (const Error& e) {
        out.error = e.code();
    }
    return out;
}

inline ScheduleOutcome oracle_two_phase(const ScheduleInstance& inst)
{
    using namespace edgefaas;
    ScheduleOutcome out;
    auto one = oracle_phase_one(inst);
    if (!one) {
        out.error = Errc::NoCandidates;
        return out;
    }
    out.phase_one = *one;
    auto two = oracle_phase_two(inst, *one);
    if (two.failure == PhaseTwoFailure::NoTierCandidates) {
        out.error = Errc::NoTierCandidates;
    } else if (two.failure == PhaseTwoFailure::NoAnchors) {
        out.error = Errc::NoAnchors;
    } else {
        out.placement = two.placement;
    }
    return out;
}

// ---- object urls ------------------------------------------------------------

inline edgefaas::ObjectUrl random_object_url(std::mt19937_64& rng)
{
    static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-._~ABCXYZ%+=";
    auto segment = [&] {
        std::string s(1 + rng() % 12, 'a');
        for (auto& c : s) {
            c = alphabet[rng() % alphabet.size()];
        }
        return s;
    };
    return {segment(), segment(), static_cast<edgefaas::ResourceId>(rng() % 3 == 0 ? rng() % 10 : rng()), segment()};
}

// ---- storage ----------------------------------------------------------------

// Set/map model of the seven storage operations. Buckets are keyed by
// (application, user name), so any cross-application leak shows up as a
// divergence.
class StorageModel {
public:
    struct Bucket {
        edgefaas::ResourceId resource = 0;
        std::map<std::string, std::string> objects;
    };

    static bool valid_name(const std::string& b)
    {
        if (b.size() < 3 || b.size() > 63) {
            return false;
        }
        auto ok = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
        if (!ok(b.front()) || !ok(b.back())) {
            return false;
        }
        return std::all_of(b.begin(), b.end(), [&](char c) { return ok(c) || c == '-'; });
    }

    std::map<std::pair<std::string, std::string>, Bucket> buckets;
};

inline std::string describe_errc(const std::optional<edgefaas::Errc>& e)
{
    return e ? std::string(edgefaas::to_string(*e)) : std::string("ok");
}

// Runs `steps` random operations against the platform's storage service and
// the model. Returns an empty string on agreement, else the first divergence.
inline std::string storage_state_machine(edgefaas::Platform& platform, std::mt19937_64& rng, int steps)
{
    using namespace edgefaas;
    const std::vector<std::string> apps{"alpha", "beta", "gamma.v2"};
    const std::vector<std::string> names{"frames", "weights", "shared", "b-1", "AB", "x", "-bad"};
    const std::vector<std::string> objects{"o1", "o2", "model.bin", "frame-7"};
    std::vector<ResourceId> ids;
    for (const auto& r : platform.registry().records()) {
        ids.push_back(r.resource_id);
    }
    StorageModel model;
    auto& storage = platform.storage();

    for (int step = 0; step < steps; ++step) {
        const auto& app = apps[rng() % apps.size()];
        const auto& bucket = names[rng() % names.size()];
        const auto& object = objects[rng() % objects.size()];
        auto key = std::make_pair(app, bucket);
        auto found = model.buckets.find(key);
        std::optional<Errc> got;
        std::optional<Errc> want;
        std::string detail;
        auto attempt = [&](const std::function<void()>& body) {
            try {
                body();
            } catch (const Error& e) {
                got = e.code();
            }
        };
        auto op = rng() % 7;
        switch (op) {
        case 0: {  // create_bucket
            PlacementHints hints;
            ResourceId expected = ids.front();
            if (rng() % 2) {
                hints.generator = ids[rng() % ids.size()];
                expected = *hints.generator;
            }
            ResourceId placed = 0;
            attempt([&] { placed = storage.create_bucket(app, bucket, hints); });
            if (!StorageModel::valid_name(bucket)) {
                want = Errc::InvalidBucketName;
            } else if (found != model.buckets.end()) {
                want = Errc::BucketExists;
            } else {
                model.buckets[key].resource = expected;
                if (!got && placed != expected) {
                    detail = "placed on " + std::to_string(placed) + " not " + std::to_string(expected);
                }
            }
            break;
        }
        case 1: {  // delete_bucket
            attempt([&] { storage.delete_bucket(app, bucket); });
            if (found == model.buckets.end()) {
                want = Errc::UnknownBucket;
            } else if (!found->second.objects.empty()) {
                want = Errc::BucketNotEmpty;
            } else {
                model.buckets.erase(found);
            }
            break;
        }
        case 2: {  // put_object
            std::string bytes(rng() % 64, '\0');
            for (auto& c : bytes) {
                c = static_cast<char>(rng());
            }
            std::string url;
            attempt([&] { url = storage.put_bytes(app, bucket, object, bytes); });
            if (found == model.buckets.end()) {
                want = Errc::UnknownBucket;
            } else {
                found->second.objects[object] = bytes;
                auto expected = ObjectUrl{app, bucket, found->second.resource, object}.render();
                if (!got && url != expected) {
                    detail = "url " + url + " not " + expected;
                }
            }
            break;
        }
        case 3: {  // get_object, sometimes through a stale resource segment
            ResourceId rid = found == model.buckets.end() ? ids[rng() % ids.size()] : found->second.resource;
            bool stale = rng() % 5 == 0;
            if (stale) {
                rid += 1;
            }
            auto url = ObjectUrl{app, bucket, rid, object}.render();
            std::string bytes;
            attempt([&] { bytes = storage.get_bytes(url); });
            if (found == model.buckets.end()) {
                want = Errc::UnknownObject;
            } else if (stale) {
                want = Errc::MapMismatch;
            } else if (!found->second.objects.count(object)) {
                want = Errc::UnknownObject;
            } else if (!got && bytes != found->second.objects.at(object)) {
                detail = "bytes differ for " + url;
            }
            break;
        }
        case 4: {  // delete_object
            attempt([&] { storage.delete_object(object, app, bucket); });
            if (found == model.buckets.end()) {
                want = Errc::UnknownBucket;
            } else if (!found->second.objects.erase(object)) {
                want = Errc::UnknownObject;
            }
            break;
        }
        case 5: {  // list_objects
            std::vector<std::string> listed;
            attempt([&] { listed = storage.list_objects(app, bucket); });
            if (found == model.buckets.end()) {
                want = Errc::UnknownBucket;
            } else {
                std::vector<std::string> expected;
                for (const auto& [name, bytes] : found->second.objects) {
                    expected.push_back(name);
                }
                if (!got && listed != expected) {
                    detail = "object listing differs";
                }
            }
            break;
        }
        default: {  // list_buckets
            std::vector<std::string> listed;
            attempt([&] { listed = storage.list_buckets(app); });
            std::vector<std::string> expected;
            for (const auto& [k, b] : model.buckets) {
                if (k.first == app) {
                    expected.push_back(k.second);
                }
            }
            if (!got && listed != expected) {
                detail = "bucket listing differs";
            }
            break;
        }
        }
        if (got != want || !detail.empty()) {
            return "step " + std::to_string(step) + " op " + std::to_string(op) + " " + app + "/" + bucket + "/" +
                   object + ": got " + describe_errc(got) + ", want " + describe_errc(want) + " " + detail;
        }
    }

    // Both bucket maps agree with the model at the end.
    auto bucket_map = platform.store().entries(maps::kBucketMap);
    if (bucket_map.size() != model.buckets.size()) {
        return "bucket_map has " + std::to_string(bucket_map.size()) + " entries, model " +
               std::to_string(model.buckets.size());
    }
    for (const auto& [k, b] : model.buckets) {
        auto it = bucket_map.find(namespaced_bucket(k.first, k.second));
        if (it == bucket_map.end() || it->second.get<ResourceId>() != b.resource) {
            return "bucket_map entry for " + k.first + "/" + k.second + " is wrong";
        }
    }
    return {};
}

// ---- latency profiles ---------------------------------------------------------

// Random pipeline of 1..max_stages stages with compute on every tier. Values
// are drawn from a coarse grid now and then so ties between partitions occur.
inline edgefaas::LatencyProfile random_profile(std::mt19937_64& rng, std::size_t max_stages = 6)
{
    using edgefaas::Tier;
    std::uniform_real_distribution<double> u(0.0, 100.0);
    auto value = [&] { return rng() % 4 == 0 ? static_cast<double>(rng() % 3) : u(rng); };
    edgefaas::LatencyProfile p;
    auto n = 1 + rng() % max_stages;
    for (std::size_t i = 0; i < n; ++i) {
        edgefaas::StageProfile s;
        s.name = "stage-" + std::to_string(i);
        s.output_size = rng() % 100'000'000;
        s.compute = {{Tier::Iot, value()}, {Tier::Edge, value()}, {Tier::Cloud, value()}};
        s.upload_to_edge = value();
        s.upload_to_cloud = value();
        p.stages.push_back(s);
    }
    return p;
}

// Closed-form latency written out directly: stage 0 on iot, 1..k on edge,
// the rest on cloud; each output pays the upload towards the next stage's tier.
inline double oracle_latency(const edgefaas::LatencyProfile& p, std::size_t k)
{
    using edgefaas::Tier;
    auto tier = [&](std::size_t i) { return i == 0 ? Tier::Iot : (i <= k ? Tier::Edge : Tier::Cloud); };
    double total = 0.0;
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
        total += p.stages[i].compute.at(tier(i));
        if (i + 1 < p.stages.size()) {
            total += tier(i + 1) == Tier::Edge ? p.stages[i].upload_to_edge : p.stages[i].upload_to_cloud;
        }
    }
    return total;
}

// Exhaustive argmin over all partitions, earliest on ties.
inline std::size_t oracle_best_partition(const edgefaas::LatencyProfile& p)
{
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.stages.size(); ++k) {
        if (oracle_latency(p, k) < oracle_latency(p, best)) {
            best = k;
        }
    }
    return best;
}

inline double relative_error(double got, double want)
{
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

// ---- weight averaging --------------------------------------------------------

// Random worker vectors split into 1..max_groups groups of 1..max_workers.
inline std::vector<std::vector<std::vector<double>>> random_worker_groups(std::mt19937_64& rng,
                                                                          std::size_t max_groups,
                                                                          std::size_t max_workers,
                                                                          std::size_t max_dim)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto dim = 1 + rng() % max_dim;
    std::vector<std::vector<std::vector<double>>> groups(1 + rng() % max_groups);
    for (auto& g : groups) {
        g.resize(1 + rng() % max_workers);
        for (auto& w : g) {
            w.resize(dim);
            for (auto& x : w) {
                x = u(rng) * std::pow(10.0, static_cast<double>(rng() % 5) - 2.0);
            }
        }
    }
    return groups;
}

// Plain mean over every worker, summed in extended precision.
inline std::vector<double> oracle_global_mean(const std::vector<std::vector<std::vector<double>>>& groups)
{
    std::vector<long double> sum;
    std::size_t n = 0;
    for (const auto& g : groups) {
        for (const auto& w : g) {
            sum.resize(w.size(), 0.0L);
            for (std::size_t i = 0; i < w.size(); ++i) {
                sum[i] += w[i];
            }
            ++n;
        }
    }
    std::vector<double> out(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) {
        out[i] = static_cast<double>(sum[i] / static_cast<long double>(n));
    }
    return out;
}

// Largest component-wise error relative to the vector's scale.
inline double vector_relative_error(const std::vector<double>& got, const std::vector<double>& want)
{
    if (got.size() != want.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        scale = std::max(scale, std::abs(want[i]));
        err = std::max(err, std::abs(got[i] - want[i]));
    }
    return scale == 0.0 ? err : err / scale;
}

// ---- crash recovery -------------------------------------------------------------

// Applies one random control-plane operation and reports its outcome as text.
// Invocation IDs are left out: they are per-process counters, not mappings.
inline std::string apply_random_operation(edgefaas::Platform& p, const edgefaas::FabricTopology& topology,
                                          std::mt19937_64& rng)
{
    using namespace edgefaas;
    static const std::vector<std::pair<std::string, std::string>> functions{
      {"videopipeline", "video-generator"}, {"videopipeline", "video-processing"},
      {"videopipeline", "motion-detection"}, {"videopipeline", "face-detection"},
      {"federatedlearning", "train"},       {"federatedlearning", "firstaggregation"},
      {"federatedlearning", "secondaggregation"}};
    static const std::vector<std::string> apps{"alpha", "beta"};
    static const std::vector<std::string> buckets{"frames", "weights", "shared"};
    static const std::vector<std::string> objects{"o1", "o2", "model.bin"};
    auto pick = [&](const auto& v) -> const auto& { return v[rng() % v.size()]; };
    auto ids = [](const std::vector<ResourceId>& v) {
        std::string out;
        for (auto id : v) {
            out += std::to_string(id) + ",";
        }
        return out;
    };
    // Weighted so state accumulates: registrations, deploys and puts dominate.
    static const std::vector<int> kinds{0, 0, 0, 1, 2, 2, 3, 3, 3, 4, 5, 5, 6, 6, 6, 7, 8, 9, 9};
    // Usually act on something that exists; both runs see the same state, so
    // the choices stay in lockstep unless a restart lost something.
    auto function = [&]() -> std::pair<std::string, std::string> {
        auto registered = p.catalog().applications();
        std::vector<std::pair<std::string, std::string>> known;
        for (const auto& f : functions) {
            if (std::find(registered.begin(), registered.end(), f.first) != registered.end()) {
                known.push_back(f);
            }
        }
        return !known.empty() && rng() % 4 != 0 ? pick(known) : pick(functions);
    };
    auto bucket = [&]() -> std::pair<std::string, std::string> {
        std::vector<std::pair<std::string, std::string>> known;
        for (const auto& app : apps) {
            for (const auto& b : p.storage().list_buckets(app)) {
                known.emplace_back(app, b);
            }
        }
        return !known.empty() && rng() % 4 != 0 ? pick(known) : std::pair{pick(apps), pick(buckets)};
    };
    auto kind = pick(kinds);
    try {
        switch (kind) {
        case 0: {
            auto node = static_cast<FabricNodeId>(1 + rng() % topology.nodes().size());
            return "register " + std::to_string(p.registry().register_resource(topology.manifest_for(node)));
        }
        case 1: {
            auto id = static_cast<ResourceId>(rng() % 12);
            p.registry().unregister_resource(id);
            return "unregister " + std::to_string(id);
        }
        case 2: {
            auto dag = p.catalog().register_application(rng() % 2 ? video_pipeline_manifest()
                                                                  : federated_learning_manifest());
            return "application " + dag.application + " " + dag.dag_id;
        }
        case 3: {
            auto [app, fn] = function();
            FunctionCreation request{app, fn, {}, {}};
            for (ResourceId id = 0; id < 11; ++id) {
                if (rng() % 3 == 0) {
                    request.data_locations.push_back(id);
                }
            }
            return "deploy " + ids(p.functions().deploy_function(request,
                                                                  synthetic_package(fn + ".py", Behavior::Echo)));
        }
        case 4: {
            auto [app, fn] = function();
            p.functions().delete_function(app, fn);
            return "delete " + fn;
        }
        case 5: {
            PlacementHints hints;
            if (rng() % 2) {
                hints.generator = static_cast<ResourceId>(rng() % 12);
            }
            return "bucket " + std::to_string(p.storage().create_bucket(pick(apps), pick(buckets), hints));
        }
        case 6: {
            std::string bytes(rng() % 64, '\0');
            for (auto& c : bytes) {
                c = static_cast<char>(rng());
            }
            auto [app, b] = bucket();
            return "put " + p.storage().put_bytes(app, b, pick(objects), bytes);
        }
        case 7: {
            auto [app, b] = bucket();
            std::string object = pick(objects);
            try {
                auto present = p.storage().list_objects(app, b);
                if (!present.empty() && rng() % 4 != 0) {
                    object = pick(present);
                }
            } catch (const Error&) {
            }
            p.storage().delete_object(object, app, b);
            return "delete object " + object;
        }
        case 8: {
            auto [app, b] = bucket();
            p.storage().delete_bucket(app, b);
            return "delete bucket " + b;
        }
        default: {
            auto [app, fn] = function();
            auto result = p.functions().invoke(app, fn, "ping", rng() % 2 == 0);
            std::string out = "invoke";
            for (const auto& o : result.outcomes) {
                out += " " + std::to_string(o.resource_id) + "=" + envelope_payload(o.output);
            }
            return out;
        }
        }
    } catch (const Error& e) {
        return "error " + std::string(to_string(e.code())) + " in operation " + std::to_string(kind);
    }
}

// Everything a client can read back from the control plane.
inline std::string observe(edgefaas::Platform& p)
{
    using namespace edgefaas;
    json out;
    out["store"] = p.store().snapshot();
    json resources = json::array();
    for (const auto& r : p.registry().list_resources()) {
        resources.push_back(to_json(r));
    }
    out["resources"] = resources;
    for (const auto& app : p.catalog().applications()) {
        out["applications"][app] = to_json(p.catalog().get(app));
        for (const auto& listing : p.functions().list_functions(app)) {
            out["candidates"][app][listing.function] =
              p.functions().candidates(app, listing.function).value_or(std::vector<ResourceId>{});
        }
    }
    for (const std::string app : {"alpha", "beta"}) {
        for (const auto& bucket : p.storage().list_buckets(app)) {
            auto rid = p.storage().bucket_resource(app, bucket);
            for (const auto& object : p.storage().list_objects(app, bucket)) {
                auto url = ObjectUrl{app, bucket, rid.value(), object}.render();
                out["objects"][url] = base64_encode(p.storage().get_bytes(url));
            }
        }
    }
    return out.dump();
}

// Runs `length` random operations twice: once uninterrupted, once with a
// control-plane restart after `prefix` operations. Returns "" when every
// operation outcome and both read snapshots agree, else the first divergence.
inline std::string crash_recovery_trial(std::uint64_t seed, std::size_t prefix, std::size_t length,
                                        std::size_t* succeeded = nullptr)
{
    auto topology = edgefaas::FabricTopology::load(data_path("three_tier_fabric.yaml"));
    SimEnv steady(topology);
    SimEnv crashed(topology);
    std::mt19937_64 a(seed), b(seed);
    for (std::size_t i = 0; i < length; ++i) {
        if (i == prefix) {
            auto before = observe(*crashed);
            crashed.restart();
            if (observe(*crashed) != before) {
                return "reads differ right after restart at " + std::to_string(i);
            }
            if (observe(*steady) != before) {
                return "runs diverged before the restart at " + std::to_string(i);
            }
        }
        auto x = apply_random_operation(*steady, topology, a);
        auto y = apply_random_operation(*crashed, topology, b);
        if (x != y) {
            return "operation " + std::to_string(i) + ": " + x + " vs " + y;
        }
        if (succeeded && !x.starts_with("error")) {
            ++*succeeded;
        }
    }
    if (prefix >= length) {
        crashed.restart();
    }
    if (observe(*steady) != observe(*crashed)) {
        return "final reads differ";
    }
    return {};
}

// ---- registry ------------------------------------------------------------------

// One random register/unregister sequence against the smallest-unused-ID
// model. Returns "" on agreement.
inline std::string id_reuse_trial(std::mt19937_64& rng, int max_steps = 30)
{
    using namespace edgefaas;
    MappingStore store(std::make_shared<MemoryKvBackend>());
    Registry registry(store);
    std::set<ResourceId> live;
    unsigned seq = 0;
    int steps = 1 + static_cast<int>(rng() % max_steps);
    for (int s = 0; s < steps; ++s) {
        if (!live.empty() && rng() % 3 == 0) {
            auto it = live.begin();
            std::advance(it, rng() % live.size());
            registry.unregister_resource(*it);
            live.erase(it);
            continue;
        }
        ResourceId expected = 0;
        while (live.count(expected)) {
            ++expected;
        }
        auto got = registry.register_resource(sample_record("iot", seq++));
        if (got != expected) {
            return "step " + std::to_string(s) + ": got ID " + std::to_string(got) + ", expected " +
                   std::to_string(expected);
        }
        live.insert(got);
    }
    std::set<ResourceId> listed;
    for (const auto& r : registry.list_resources()) {
        listed.insert(r.resource_id);
    }
    return listed == live ? std::string{} : std::string("listing differs from the model");
}

// Builds random deployments and buckets on the three-tier fabric, then tries to
// unregister every resource. Returns "" when exactly the referenced ones refuse.
inline std::string busy_gating_trial(std::uint64_t seed, int operations = 40, std::size_t* refusals = nullptr,
                                     std::size_t* removals = nullptr)
{
    using namespace edgefaas;
    std::size_t ignored = 0;
    refusals = refusals ? refusals : &ignored;
    removals = removals ? removals : &ignored;
    auto topology = FabricTopology::load(data_path("three_tier_fabric.yaml"));
    SimEnv env(topology);
    std::mt19937_64 rng(seed);
    register_fabric(env->registry(), topology);
    env->catalog().register_application(video_pipeline_manifest());
    env->catalog().register_application(federated_learning_manifest());
    for (int i = 0; i < operations; ++i) {
        apply_random_operation(*env, topology, rng);
    }

    std::set<ResourceId> referenced;
    for (const auto& app : env->catalog().applications()) {
        for (const auto& listing : env->functions().list_functions(app)) {
            for (auto id : env->functions().candidates(app, listing.function).value_or(std::vector<ResourceId>{})) {
                referenced.insert(id);
            }
        }
    }
    for (const std::string app : {"alpha", "beta"}) {
        for (const auto& bucket : env->storage().list_buckets(app)) {
            referenced.insert(*env->storage().bucket_resource(app, bucket));
        }
    }
    for (const auto& record : env->registry().records()) {
        auto id = record.resource_id;
        bool refused = false;
        try {
            env->registry().unregister_resource(id);
        } catch (const Error& e) {
            if (e.code() != Errc::ResourceBusy) {
                return "resource " + std::to_string(id) + " failed with " + std::string(to_string(e.code()));
            }
            refused = true;
        }
        ++*(refused ? refusals : removals);
        if (refused != (referenced.count(id) == 1)) {
            return "resource " + std::to_string(id) + (refused ? " refused without references"
                                                               : " removed while referenced");
        }
    }
    return {};
}

} // namespace testing
