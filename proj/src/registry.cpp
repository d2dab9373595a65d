#include "edgefaas/registry.hpp"

#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <set>

namespace edgefaas {

namespace {

constexpr std::array<std::string_view, 13> kManifestKeys{
  "name", "node", "memory", "cpu", "storage", "gpunode", "gpu",
  "gateway", "pwd", "prometheus", "minio", "minioakey", "minioskey"};

std::string scalar(const YAML::Node& root, std::string_view key)
{
    auto node = root[std::string(key)];
    if (!node || !node.IsScalar()) {
        fail(Errc::MalformedManifest, "missing field '" + std::string(key) + "'");
    }
    return node.as<std::string>();
}

std::uint32_t count_field(const YAML::Node& root, std::string_view key)
{
    auto text = std::string(trim(scalar(root, key)));
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        fail(Errc::MalformedManifest, "field '" + std::string(key) + "' is not a count: " + text);
    }
    return value;
}

std::uint64_t capacity_field(const YAML::Node& root, std::string_view key)
{
    auto text = scalar(root, key);
    auto value = parse_capacity(text);
    if (!value) {
        fail(Errc::MalformedManifest, "field '" + std::string(key) + "' is not a capacity: " + text);
    }
    return *value;
}

} // namespace

std::optional<Tier> tier_from_name(std::string_view name) noexcept
{
    if (iequals(name, "iot")) {
        return Tier::Iot;
    }
    if (iequals(name, "edge")) {
        return Tier::Edge;
    }
    if (iequals(name, "cloud")) {
        return Tier::Cloud;
    }
    return std::nullopt;
}

std::string_view to_string(Tier tier) noexcept
{
    switch (tier) {
    case Tier::Iot: return "iot";
    case Tier::Edge: return "edge";
    case Tier::Cloud: return "cloud";
    }
    return "unknown";
}

ResourceRecord ResourceRecord::redacted() const
{
    ResourceRecord copy = *this;
    copy.pwd = kRedacted;
    copy.minio_access_key = kRedacted;
    copy.minio_secret_key = kRedacted;
    return copy;
}

json to_json(const ResourceRecord& r)
{
    return json{
      {"resource_id", r.resource_id},
      {"name", r.name},
      {"node", r.node},
      {"memory", r.memory},
      {"cpu", r.cpu},
      {"storage", r.storage},
      {"gpunode", r.gpunode},
      {"gpu", r.gpu},
      {"gateway", r.gateway},
      {"pwd", r.pwd},
      {"prometheus", r.prometheus},
      {"minio", r.minio},
      {"minioakey", r.minio_access_key},
      {"minioskey", r.minio_secret_key},
    };
}

ResourceRecord resource_from_json(const json& v)
{
    ResourceRecord r;
    r.resource_id = v.at("resource_id").get<ResourceId>();
    r.name = v.at("name").get<std::string>();
    r.node = v.at("node").get<std::uint32_t>();
    r.memory = v.at("memory").get<std::uint64_t>();
    r.cpu = v.at("cpu").get<std::uint32_t>();
    r.storage = v.at("storage").get<std::uint64_t>();
    r.gpunode = v.at("gpunode").get<std::uint32_t>();
    r.gpu = v.at("gpu").get<std::uint32_t>();
    r.gateway = v.at("gateway").get<std::string>();
    r.pwd = v.at("pwd").get<std::string>();
    r.prometheus = v.at("prometheus").get<std::string>();
    r.minio = v.at("minio").get<std::string>();
    r.minio_access_key = v.at("minioakey").get<std::string>();
    r.minio_secret_key = v.at("minioskey").get<std::string>();
    return r;
}

void validate(const ResourceRecord& r)
{
    if (r.name.empty()) {
        fail(Errc::MalformedManifest, "name must not be empty");
    }
    if (r.node < 1 || r.cpu < 1 || r.memory == 0 || r.storage == 0) {
        fail(Errc::MalformedManifest, "node, cpu, memory and storage must be positive");
    }
    if (r.gpunode > r.node) {
        fail(Errc::MalformedManifest, "gpunode exceeds node count");
    }
    if (r.gpu > 0 && r.gpunode == 0) {
        fail(Errc::MalformedManifest, "gpu > 0 requires gpunode > 0");
    }
    for (auto [field, value] : {std::pair<std::string_view, const std::string*>{"gateway", &r.gateway},
                                {"prometheus", &r.prometheus},
                                {"minio", &r.minio}}) {
        if (!parse_endpoint(*value)) {
            fail(Errc::MalformedManifest,
                 std::string(field) + " is not a host:port endpoint: " + *value);
        }
    }
}

ParsedManifest parse_resource_manifest(std::string_view document)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        fail(Errc::MalformedManifest, std::string("not a YAML document: ") + e.what());
    }
    if (!root.IsMap()) {
        fail(Errc::MalformedManifest, "manifest must be a mapping");
    }

    ParsedManifest parsed;
    auto& r = parsed.record;
    r.name = scalar(root, "name");
    r.node = count_field(root, "node");
    r.memory = capacity_field(root, "memory");
    r.cpu = count_field(root, "cpu");
    r.storage = capacity_field(root, "storage");
    r.gpunode = count_field(root, "gpunode");
    r.gpu = count_field(root, "gpu");
    r.gateway = std::string(trim(scalar(root, "gateway")));
    r.pwd = scalar(root, "pwd");
    r.prometheus = std::string(trim(scalar(root, "prometheus")));
    r.minio = std::string(trim(scalar(root, "minio")));
    r.minio_access_key = scalar(root, "minioakey");
    r.minio_secret_key = scalar(root, "minioskey");
    validate(r);

    for (const auto& entry : root) {
        auto key = entry.first.as<std::string>();
        if (std::find(kManifestKeys.begin(), kManifestKeys.end(), key) == kManifestKeys.end()) {
            parsed.warnings.push_back("unknown manifest key '" + key + "' ignored");
        }
    }
    if (!r.tier()) {
        parsed.warnings.push_back("tier '" + r.name +
                                  "' is not iot/edge/cloud; it will never match an affinity");
    }
    return parsed;
}

Registry::Registry(MappingStore& store)
  : store_(store)
{
}

ResourceId Registry::register_resource(ResourceRecord record)
{
    validate(record);
    std::lock_guard lock(mutex_);
    ResourceId assigned = 0;
    store_.update(maps::kResourceMapping, [&](MapContents& contents) {
        std::set<ResourceId> live;
        for (const auto& [key, value] : contents) {
            auto existing = resource_from_json(value);
            if (existing.gateway == record.gateway) {
                fail(Errc::DuplicateEndpoint,
                     "gateway " + record.gateway + " already registered as resource " +
                       std::to_string(existing.resource_id));
            }
            live.insert(existing.resource_id);
        }
        while (live.count(assigned) != 0) {
            ++assigned;
        }
        record.resource_id = assigned;
        contents[std::to_string(assigned)] = to_json(record);
    });
    spdlog::info("registered resource {} ({}, gateway {})", assigned, record.name, record.gateway);
    return assigned;
}

ResourceId Registry::register_manifest(std::string_view document, std::vector<std::string>* warnings)
{
    auto parsed = parse_resource_manifest(document);
    for (const auto& w : parsed.warnings) {
        spdlog::warn("{}", w);
    }
    if (warnings != nullptr) {
        *warnings = parsed.warnings;
    }
    return register_resource(std::move(parsed.record));
}

void Registry::unregister_resource(ResourceId id)
{
    std::lock_guard lock(mutex_);
    auto key = std::to_string(id);
    if (!store_.contains(maps::kResourceMapping, key)) {
        fail(Errc::UnknownResource, "no resource " + key);
    }
    for (const auto& [function, ids] : store_.entries(maps::kCandidateResource)) {
        for (const auto& candidate : ids) {
            if (candidate.get<ResourceId>() == id) {
                fail(Errc::ResourceBusy, "function " + function + " is still deployed on resource " + key,
                     {id});
            }
        }
    }
    for (const auto& [bucket, owner] : store_.entries(maps::kBucketMap)) {
        if (owner.get<ResourceId>() == id) {
            fail(Errc::ResourceBusy, "bucket " + bucket + " still lives on resource " + key, {id});
        }
    }
    store_.erase(maps::kResourceMapping, key);
    spdlog::info("unregistered resource {}", id);
}

std::vector<ResourceRecord> Registry::records() const
{
    std::vector<ResourceRecord> out;
    for (const auto& [key, value] : store_.entries(maps::kResourceMapping)) {
        out.push_back(resource_from_json(value));
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.resource_id < b.resource_id; });
    return out;
}

std::vector<ResourceRecord> Registry::list_resources() const
{
    auto out = records();
    for (auto& r : out) {
        r = r.redacted();
    }
    return out;
}

std::optional<ResourceRecord> Registry::find(ResourceId id) const
{
    auto value = store_.get(maps::kResourceMapping, std::to_string(id));
    if (!value) {
        return std::nullopt;
    }
    return resource_from_json(*value);
}

ResourceRecord Registry::get(ResourceId id) const
{
    auto record = find(id);
    if (!record) {
        fail(Errc::UnknownResource, "no resource " + std::to_string(id));
    }
    return *record;
}

} // namespace edgefaas
