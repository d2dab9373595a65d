#include "edgefaas/sim_fabric.hpp"

#include "edgefaas/envelope.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace edgefaas {

namespace {

constexpr std::string_view kHostPrefix = "node-";
constexpr std::string_view kHostSuffix = ".sim";

template <typename T>
T scalar(const YAML::Node& node, const char* key, T fallback)
{
    auto child = node[key];
    if (!child) {
        return fallback;
    }
    try {
        return child.as<T>();
    } catch (const YAML::Exception&) {
        fail(Errc::InvalidField, std::string("fabric field ") + key + " is malformed");
    }
}

std::uint64_t capacity(const YAML::Node& node, const char* key)
{
    auto child = node[key];
    if (!child) {
        fail(Errc::InvalidField, std::string("fabric resource lacks ") + key);
    }
    auto parsed = parse_capacity(child.as<std::string>());
    if (!parsed || *parsed == 0) {
        fail(Errc::InvalidField, std::string("bad capacity for ") + key);
    }
    return *parsed;
}

std::optional<FabricNodeId> node_from_host(std::string_view host)
{
    if (host.size() <= kHostPrefix.size() + kHostSuffix.size() ||
        host.substr(0, kHostPrefix.size()) != kHostPrefix ||
        host.substr(host.size() - kHostSuffix.size()) != kHostSuffix) {
        return std::nullopt;
    }
    auto digits = host.substr(kHostPrefix.size(), host.size() - kHostPrefix.size() - kHostSuffix.size());
    FabricNodeId id = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') {
            return std::nullopt;
        }
        id = id * 10 + static_cast<FabricNodeId>(c - '0');
    }
    return id;
}

std::vector<double> weights_of(const json& value)
{
    std::vector<double> out;
    for (const auto& x : value) {
        out.push_back(x.get<double>());
    }
    return out;
}

} // namespace

// --- topology ---------------------------------------------------------------

FabricTopology FabricTopology::parse(std::string_view yaml)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidField, std::string("fabric file is not YAML: ") + e.what());
    }
    if (!root["resources"] || !root["resources"].IsSequence()) {
        fail(Errc::InvalidField, "fabric file needs a resources list");
    }
    FabricTopology topology;
    for (const auto& r : root["resources"]) {
        FabricNode n;
        n.id = scalar<FabricNodeId>(r, "id", 0);
        if (!r["id"]) {
            fail(Errc::InvalidField, "fabric resource without id");
        }
        auto tier = tier_from_name(scalar<std::string>(r, "tier", ""));
        if (!tier) {
            fail(Errc::InvalidField, "fabric resource " + std::to_string(n.id) + " has no valid tier");
        }
        n.tier = *tier;
        n.node = scalar<std::uint32_t>(r, "node", 1);
        n.memory = capacity(r, "memory");
        n.cpu = scalar<std::uint32_t>(r, "cpu", 1);
        n.storage = capacity(r, "storage");
        n.gpunode = scalar<std::uint32_t>(r, "gpunode", 0);
        n.gpu = scalar<std::uint32_t>(r, "gpu", 0);
        topology.add_node(n);
    }

    auto links = [&](const char* key, auto&& apply) {
        auto list = root[key];
        if (!list) {
            return;
        }
        if (!list.IsSequence()) {
            fail(Errc::InvalidField, std::string(key) + " must be a list of [a, b, value]");
        }
        for (const auto& entry : list) {
            if (!entry.IsSequence() || entry.size() != 3) {
                fail(Errc::InvalidField, std::string(key) + " entries are [a, b, value]");
            }
            try {
                apply(entry[0].as<FabricNodeId>(), entry[1].as<FabricNodeId>(), entry[2].as<double>());
            } catch (const YAML::Exception&) {
                fail(Errc::InvalidField, std::string("malformed ") + key + " entry");
            }
        }
    };
    links("rtt_ms", [&](auto a, auto b, double v) { topology.set_rtt(a, b, v); });
    links("bandwidth_mbps", [&](auto a, auto b, double v) { topology.set_bandwidth(a, b, v); });

    for (const auto& [k, mbps] : topology.bandwidth_) {
        if (topology.rtt_.count(k) == 0) {
            fail(Errc::InvalidField, "link " + std::to_string(k.first) + "-" + std::to_string(k.second) +
                                       " has a bandwidth but no rtt");
        }
    }
    return topology;
}

FabricTopology FabricTopology::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(Errc::IoFailure, "cannot read fabric file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void FabricTopology::add_node(FabricNode node)
{
    if (has_node(node.id)) {
        fail(Errc::InvalidField, "duplicate fabric node " + std::to_string(node.id));
    }
    if (node.node == 0 || node.cpu == 0 || node.memory == 0 || node.storage == 0 ||
        node.gpunode > node.node || (node.gpu > 0 && node.gpunode == 0)) {
        fail(Errc::InvalidField, "fabric node " + std::to_string(node.id) + " violates capacity rules");
    }
    nodes_.push_back(node);
    std::sort(nodes_.begin(), nodes_.end(),
              [](const FabricNode& a, const FabricNode& b) { return a.id < b.id; });
}

void FabricTopology::set_rtt(FabricNodeId a, FabricNodeId b, double ms)
{
    if (!has_node(a) || !has_node(b)) {
        fail(Errc::InvalidField, "rtt between undeclared nodes");
    }
    if (!(ms >= 0.0)) {
        fail(Errc::InvalidField, "rtt must be non-negative");
    }
    if (a != b) {
        rtt_[key(a, b)] = ms;
    } else if (ms != 0.0) {
        fail(Errc::InvalidField, "rtt diagonal must be zero");
    }
}

void FabricTopology::set_bandwidth(FabricNodeId a, FabricNodeId b, double mbps)
{
    if (!has_node(a) || !has_node(b) || a == b) {
        fail(Errc::InvalidField, "bandwidth link must join two distinct declared nodes");
    }
    if (!(mbps > 0.0)) {
        fail(Errc::InvalidField, "bandwidth must be positive");
    }
    bandwidth_[key(a, b)] = mbps;
}

const FabricNode& FabricTopology::node(FabricNodeId id) const
{
    auto it = std::find_if(nodes_.begin(), nodes_.end(), [&](const FabricNode& n) { return n.id == id; });
    if (it == nodes_.end()) {
        fail(Errc::UnknownResource, "fabric has no node " + std::to_string(id));
    }
    return *it;
}

bool FabricTopology::has_node(FabricNodeId id) const noexcept
{
    return std::any_of(nodes_.begin(), nodes_.end(), [&](const FabricNode& n) { return n.id == id; });
}

std::vector<FabricNodeId> FabricTopology::nodes_of_tier(Tier tier) const
{
    std::vector<FabricNodeId> out;
    for (const auto& n : nodes_) {
        if (n.tier == tier) {
            out.push_back(n.id);
        }
    }
    return out;
}

std::optional<double> FabricTopology::rtt(FabricNodeId a, FabricNodeId b) const
{
    if (a == b) {
        return 0.0;
    }
    auto it = rtt_.find(key(a, b));
    return it == rtt_.end() ? std::nullopt : std::optional<double>(it->second);
}

std::optional<double> FabricTopology::bandwidth(FabricNodeId a, FabricNodeId b) const
{
    auto it = bandwidth_.find(key(a, b));
    return it == bandwidth_.end() ? std::nullopt : std::optional<double>(it->second);
}

double FabricTopology::direct_time(std::uint64_t bytes, FabricNodeId a, FabricNodeId b) const
{
    auto mbps = bandwidth(a, b);
    if (!mbps) {
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(bytes) * 8.0 / (*mbps * 1e6) + *rtt(a, b) / 1000.0;
}

double FabricTopology::transfer_time(std::uint64_t bytes, FabricNodeId src, FabricNodeId dst) const
{
    node(src);
    node(dst);
    if (src == dst) {
        return 0.0;
    }
    if (bandwidth(src, dst)) {
        return direct_time(bytes, src, dst);
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& hop : nodes_) {
        if (hop.id == src || hop.id == dst) {
            continue;
        }
        best = std::min(best, direct_time(bytes, src, hop.id) + direct_time(bytes, hop.id, dst));
    }
    if (best == std::numeric_limits<double>::infinity()) {
        fail(Errc::NoLink, "no link from " + std::to_string(src) + " to " + std::to_string(dst));
    }
    return best;
}

std::string FabricTopology::host_of(FabricNodeId id)
{
    return std::string(kHostPrefix) + std::to_string(id) + std::string(kHostSuffix);
}

ResourceRecord FabricTopology::manifest_for(FabricNodeId id) const
{
    const auto& n = node(id);
    ResourceRecord r;
    r.name = std::string(to_string(n.tier));
    r.node = n.node;
    r.memory = n.memory;
    r.cpu = n.cpu;
    r.storage = n.storage;
    r.gpunode = n.gpunode;
    r.gpu = n.gpu;
    auto host = host_of(id);
    r.gateway = host + ":8080";
    r.pwd = "sim-gateway-secret-" + std::to_string(id);
    r.prometheus = host + ":9090";
    r.minio = host + ":9000";
    r.minio_access_key = "sim-access-" + std::to_string(id);
    r.minio_secret_key = "sim-object-secret-" + std::to_string(id);
    return r;
}

std::optional<FabricNodeId> FabricTopology::node_of(const ResourceRecord& record) const
{
    for (const auto& endpoint : {record.gateway, record.minio}) {
        auto parsed = parse_endpoint(endpoint);
        if (!parsed) {
            continue;
        }
        auto id = node_from_host(parsed->host);
        if (id && has_node(*id)) {
            return id;
        }
    }
    return std::nullopt;
}

RttMatrix FabricTopology::rtt_for(std::span<const ResourceRecord> records) const
{
    RttMatrix out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto a = node_of(records[i]);
        for (std::size_t j = i + 1; a && j < records.size(); ++j) {
            auto b = node_of(records[j]);
            if (!b) {
                continue;
            }
            if (auto ms = rtt(*a, *b)) {
                out.set(records[i].resource_id, records[j].resource_id, *ms);
            }
        }
    }
    return out;
}

// --- vector averaging -------------------------------------------------------

json vector_average(const std::vector<json>& items)
{
    std::vector<double> sum;
    double total = 0.0;
    for (const auto& item : items) {
        std::vector<double> w;
        double count = 1.0;
        if (item.is_array()) {
            w = weights_of(item);
        } else if (item.is_object() && item.contains("weights")) {
            w = weights_of(item.at("weights"));
            count = item.value("count", 1.0);
        } else {
            fail(Errc::InvalidField, "vector-average input must be an array or {weights, count}");
        }
        if (!(count > 0.0)) {
            fail(Errc::InvalidField, "vector-average count must be positive");
        }
        if (sum.empty()) {
            sum.assign(w.size(), 0.0);
        } else if (w.size() != sum.size()) {
            fail(Errc::InvalidField, "vector-average inputs differ in dimension");
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            sum[i] += count * w[i];
        }
        total += count;
    }
    if (items.empty()) {
        fail(Errc::InvalidField, "vector-average needs at least one input");
    }
    for (auto& x : sum) {
        x /= total;
    }
    return json{{"weights", sum}, {"count", total}};
}

// --- provider ---------------------------------------------------------------

SimFabric::SimFabric(FabricTopology topology)
  : topology_(std::move(topology))
{
    for (const auto& n : topology_.nodes()) {
        state_[n.id];
    }
}

void SimFabric::set_online(FabricNodeId id, bool online)
{
    std::lock_guard lock(mutex_);
    topology_.node(id);
    state_[id].online = online;
}

void SimFabric::set_reject_deploys(FabricNodeId id, bool reject)
{
    std::lock_guard lock(mutex_);
    topology_.node(id);
    state_[id].reject_deploys = reject;
}

void SimFabric::set_object_resolver(ObjectResolver resolver)
{
    std::lock_guard lock(mutex_);
    resolver_ = std::move(resolver);
}

SimFabric::NodeState& SimFabric::reach(const ResourceRecord& resource)
{
    auto id = topology_.node_of(resource);
    if (!id) {
        fail(Errc::Unreachable, "no simulated node behind " + resource.gateway, {resource.resource_id});
    }
    auto& state = state_.at(*id);
    if (!state.online) {
        fail(Errc::Unreachable, "node " + std::to_string(*id) + " is offline", {resource.resource_id});
    }
    return state;
}

void SimFabric::deploy(const ResourceRecord& resource, const std::string& function,
                       const DeploymentPackage& package)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    if (state.reject_deploys) {
        fail(Errc::BackendRejected, "deployment of " + function + " refused", {resource.resource_id});
    }
    auto& slot = state.functions[function];
    slot.descriptor = package.descriptor;  // redeploy keeps the counter
}

void SimFabric::remove(const ResourceRecord& resource, const std::string& function)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    if (state.functions.erase(function) == 0) {
        fail(Errc::BackendRejected, "function " + function + " not found", {resource.resource_id});
    }
}

FunctionDescription SimFabric::describe(const ResourceRecord& resource, const std::string& function)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.functions.find(function);
    if (it == state.functions.end()) {
        fail(Errc::BackendRejected, "function " + function + " not found", {resource.resource_id});
    }
    FunctionDescription d;
    d.name = function;
    d.status = "Ready";
    d.replicas = 1;
    d.invocation_count = it->second.invocations;
    d.image = it->second.descriptor.image;
    d.url = "http://" + resource.gateway + "/function/" + function;
    d.labels = it->second.descriptor.labels;
    return d;
}

InvokeResult SimFabric::invoke(const ResourceRecord& resource, const std::string& function,
                               const std::string& body)
{
    PackageDescriptor descriptor;
    Tier tier = Tier::Iot;
    {
        std::lock_guard lock(mutex_);
        auto& state = reach(resource);
        auto it = state.functions.find(function);
        if (it == state.functions.end()) {
            fail(Errc::BackendRejected, "function " + function + " not found", {resource.resource_id});
        }
        ++it->second.invocations;
        descriptor = it->second.descriptor;
        tier = topology_.node(*topology_.node_of(resource)).tier;
    }
    InvokeResult result;
    // The body runs unlocked: vector-average may read objects back through us.
    result.output = run_body(descriptor, envelope_payload(body));
    auto compute = descriptor.synthetic.compute.find(tier);
    result.latency_seconds = compute == descriptor.synthetic.compute.end() ? 0.0 : compute->second;
    return result;
}

std::string SimFabric::run_body(const PackageDescriptor& descriptor, const std::string& payload)
{
    switch (descriptor.synthetic.behavior) {
    case Behavior::Echo:
    case Behavior::Delay:
        return payload;
    case Behavior::FixedOutput:
        return std::string(descriptor.synthetic.output_size, 'x');
    case Behavior::VectorAverage: {
        auto parsed = json::parse(payload, nullptr, false);
        if (parsed.is_discarded()) {
            fail(Errc::BackendRejected, "vector-average payload is not JSON");
        }
        json inputs = parsed.is_object() && parsed.contains("inputs") ? parsed.at("inputs") : parsed;
        if (!inputs.is_array()) {
            fail(Errc::BackendRejected, "vector-average expects a list of inputs");
        }
        ObjectResolver resolver;
        {
            std::lock_guard lock(mutex_);
            resolver = resolver_;
        }
        std::vector<json> items;
        for (const auto& input : inputs) {
            if (input.is_string()) {
                if (!resolver) {
                    fail(Errc::BackendRejected, "no object resolver for input " + input.get<std::string>());
                }
                auto fetched = json::parse(resolver(input.get<std::string>()), nullptr, false);
                if (fetched.is_discarded()) {
                    fail(Errc::BackendRejected, "input object is not JSON");
                }
                items.push_back(std::move(fetched));
            } else {
                items.push_back(input);
            }
        }
        try {
            return vector_average(items).dump();
        } catch (const Error& e) {
            fail(Errc::BackendRejected, e.what());
        }
    }
    }
    return payload;
}

// --- object store -----------------------------------------------------------

void SimFabric::make_bucket(const ResourceRecord& resource, const std::string& bucket)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    if (!state.buckets.emplace(bucket, std::map<std::string, StoredObject>{}).second) {
        fail(Errc::BucketExists, "bucket " + bucket + " already exists", {resource.resource_id});
    }
}

void SimFabric::remove_bucket(const ResourceRecord& resource, const std::string& bucket)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.buckets.find(bucket);
    if (it == state.buckets.end()) {
        fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
    }
    if (!it->second.empty()) {
        fail(Errc::BucketNotEmpty, "bucket " + bucket + " still holds objects", {resource.resource_id});
    }
    state.buckets.erase(it);
}

void SimFabric::put_object(const ResourceRecord& resource, const std::string& bucket,
                           const std::string& object, std::string_view bytes)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.buckets.find(bucket);
    if (it == state.buckets.end()) {
        fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
    }
    std::uint64_t used = 0;
    for (const auto& [name, objects] : state.buckets) {
        for (const auto& [key, stored] : objects) {
            if (name != bucket || key != object) {
                used += stored.bytes.size();
            }
        }
    }
    const auto& n = topology_.node(*topology_.node_of(resource));
    if (used + bytes.size() > n.storage * n.node) {
        fail(Errc::BackendWriteFailure, "node storage exhausted", {resource.resource_id});
    }
    auto& stored = it->second[object];
    stored.bytes.assign(bytes.begin(), bytes.end());
    ++stored.version;
}

std::string SimFabric::get_object(const ResourceRecord& resource, const std::string& bucket,
                                  const std::string& object)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.buckets.find(bucket);
    if (it == state.buckets.end()) {
        fail(Errc::UnknownObject, "no bucket " + bucket, {resource.resource_id});
    }
    auto obj = it->second.find(object);
    if (obj == it->second.end()) {
        fail(Errc::UnknownObject, "no object " + object + " in " + bucket, {resource.resource_id});
    }
    return obj->second.bytes;
}

void SimFabric::delete_object(const ResourceRecord& resource, const std::string& bucket,
                              const std::string& object)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.buckets.find(bucket);
    if (it == state.buckets.end()) {
        fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
    }
    if (it->second.erase(object) == 0) {
        fail(Errc::UnknownObject, "no object " + object + " in " + bucket, {resource.resource_id});
    }
}

std::vector<std::string> SimFabric::list_objects(const ResourceRecord& resource, const std::string& bucket)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    auto it = state.buckets.find(bucket);
    if (it == state.buckets.end()) {
        fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
    }
    std::vector<std::string> out;
    for (const auto& [name, stored] : it->second) {
        out.push_back(name);
    }
    return out;
}

std::optional<std::uint64_t> SimFabric::bytes_used(const ResourceRecord& resource)
{
    std::lock_guard lock(mutex_);
    auto& state = reach(resource);
    std::uint64_t used = 0;
    for (const auto& [name, objects] : state.buckets) {
        for (const auto& [key, stored] : objects) {
            used += stored.bytes.size();
        }
    }
    return used;
}

std::set<std::string> SimFabric::deployed_functions(FabricNodeId id) const
{
    std::lock_guard lock(mutex_);
    std::set<std::string> out;
    auto it = state_.find(id);
    if (it != state_.end()) {
        for (const auto& [name, deployment] : it->second.functions) {
            out.insert(name);
        }
    }
    return out;
}

std::uint64_t SimFabric::invocation_count(FabricNodeId id, const std::string& function) const
{
    std::lock_guard lock(mutex_);
    auto it = state_.find(id);
    if (it == state_.end()) {
        return 0;
    }
    auto fn = it->second.functions.find(function);
    return fn == it->second.functions.end() ? 0 : fn->second.invocations;
}

std::uint64_t SimFabric::total_invocations() const
{
    std::lock_guard lock(mutex_);
    std::uint64_t total = 0;
    for (const auto& [id, state] : state_) {
        for (const auto& [name, deployment] : state.functions) {
            total += deployment.invocations;
        }
    }
    return total;
}

std::uint64_t SimFabric::object_version(FabricNodeId id, const std::string& bucket,
                                        const std::string& object) const
{
    std::lock_guard lock(mutex_);
    auto it = state_.find(id);
    if (it == state_.end()) {
        return 0;
    }
    auto b = it->second.buckets.find(bucket);
    if (b == it->second.buckets.end()) {
        return 0;
    }
    auto o = b->second.find(object);
    return o == b->second.end() ? 0 : o->second.version;
}

} // namespace edgefaas
