#include "edgefaas/storage.hpp"

#include "edgefaas/appmodel.hpp"
#include "edgefaas/object_url.hpp"
#include "edgefaas/util.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace edgefaas {

namespace {

bool alnum_lower(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

void check_object_name(const std::string& object)
{
    if (object.empty() || object.find('/') != std::string::npos) {
        fail(Errc::InvalidField, "object name must be a single non-empty path segment");
    }
}

// The backend name may also carry dots from the application name.
bool s3_legal(std::string_view name)
{
    if (name.size() < 3 || name.size() > 63 || !alnum_lower(name.front()) || !alnum_lower(name.back())) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) { return alnum_lower(c) || c == '-' || c == '.'; });
}

} // namespace

bool valid_bucket_name(std::string_view name) noexcept
{
    if (name.size() < 3 || name.size() > 63) {
        return false;
    }
    if (!alnum_lower(name.front()) || !alnum_lower(name.back())) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [](char c) { return alnum_lower(c) || c == '-'; });
}

std::string namespaced_bucket(std::string_view application, std::string_view bucket)
{
    return to_lower(std::string(application) + "-" + std::string(bucket));
}

StorageService::StorageService(MappingStore& store, Registry& registry, ObjectStore& backend,
                               std::uint64_t large_data_threshold)
  : store_(store)
  , registry_(registry)
  , backend_(backend)
  , threshold_(large_data_threshold)
{
}

bool StorageService::has_room(const ResourceRecord& record) const
{
    try {
        auto used = backend_.bytes_used(record);
        return !used || *used < record.total_storage();
    } catch (const Error&) {
        return false;  // unreachable stores cannot take data
    }
}

std::optional<ResourceId> StorageService::function_home(const std::string& qualified) const
{
    auto ids = store_.get(maps::kCandidateResource, qualified);
    if (!ids || !ids->is_array() || ids->empty()) {
        return std::nullopt;
    }
    auto all = ids->get<std::vector<ResourceId>>();
    return *std::min_element(all.begin(), all.end());
}

ResourceId StorageService::place_data(const std::string& application, const std::string& bucket,
                                      const PlacementHints& hints) const
{
    auto records = registry_.records();
    auto usable = [&](std::optional<ResourceId> id) -> std::optional<ResourceId> {
        if (!id) {
            return std::nullopt;
        }
        auto it = std::find_if(records.begin(), records.end(),
                               [&](const ResourceRecord& r) { return r.resource_id == *id; });
        if (it == records.end() || !has_room(*it)) {
            return std::nullopt;
        }
        return id;
    };
    auto producer = hints.producer;
    if (!producer && hints.producer_function) {
        producer = function_home(*hints.producer_function);
    }
    auto consumer = hints.consumer;
    if (!consumer && hints.consumer_function) {
        consumer = function_home(*hints.consumer_function);
    }

    if (auto id = usable(hints.generator)) {
        return *id;
    }
    if (hints.expected_volume && *hints.expected_volume > threshold_) {
        if (auto id = usable(producer)) {
            return *id;
        }
    }
    if (auto id = usable(consumer)) {
        return *id;
    }
    // records() is sorted by ID.
    for (const auto& r : records) {
        if (has_room(r)) {
            return r.resource_id;
        }
    }
    fail(Errc::NoStorageCapacity, "no resource has storage left for " + application + "/" + bucket);
}

ResourceId StorageService::create_bucket(const std::string& application, const std::string& bucket,
                                         const PlacementHints& hints)
{
    if (!valid_application_name(application)) {
        fail(Errc::InvalidField, "invalid application name " + application);
    }
    auto name = namespaced_bucket(application, bucket);
    if (!valid_bucket_name(bucket) || !s3_legal(name)) {
        fail(Errc::InvalidBucketName, "invalid bucket name " + bucket);
    }
    std::lock_guard lock(mutex_);
    if (store_.contains(maps::kBucketMap, name)) {
        fail(Errc::BucketExists, "bucket " + bucket + " already exists in " + application);
    }
    auto id = place_data(application, bucket, hints);
    auto record = registry_.get(id);
    try {
        backend_.make_bucket(record, name);
    } catch (const Error& e) {
        if (e.code() == Errc::BucketExists) {
            throw;
        }
        fail(Errc::PlacementFailed, std::string("cannot create bucket on resource ") + std::to_string(id) +
                                      ": " + e.what(),
             {id});
    }
    store_.put(maps::kBucketMap, name, id);
    store_.update(maps::kApplicationBucket, [&](MapContents& contents) {
        auto& names = contents[application];
        if (!names.is_array()) {
            names = json::array();
        }
        names.push_back(bucket);
        auto sorted = names.get<std::vector<std::string>>();
        std::sort(sorted.begin(), sorted.end());
        names = sorted;
    });
    spdlog::info("bucket {} placed on resource {}", name, id);
    return id;
}

StorageService::Binding StorageService::bound(const std::string& application,
                                              const std::string& bucket) const
{
    auto name = namespaced_bucket(application, bucket);
    auto id = store_.get(maps::kBucketMap, name);
    if (!id) {
        fail(Errc::UnknownBucket, "no bucket " + bucket + " in " + application);
    }
    return {name, registry_.get(id->get<ResourceId>())};
}

void StorageService::delete_bucket(const std::string& application, const std::string& bucket)
{
    std::lock_guard lock(mutex_);
    auto binding = bound(application, bucket);
    backend_.remove_bucket(binding.resource, binding.namespaced);
    store_.update(maps::kApplicationBucket, [&](MapContents& contents) {
        auto it = contents.find(application);
        if (it == contents.end()) {
            return;
        }
        auto names = it->second.get<std::vector<std::string>>();
        names.erase(std::remove(names.begin(), names.end(), bucket), names.end());
        if (names.empty()) {
            contents.erase(it);
        } else {
            it->second = names;
        }
    });
    store_.erase(maps::kBucketMap, binding.namespaced);
}

std::vector<std::string> StorageService::list_buckets(const std::string& application) const
{
    auto names = store_.get(maps::kApplicationBucket, application);
    if (!names) {
        return {};
    }
    return names->get<std::vector<std::string>>();
}

std::optional<ResourceId> StorageService::bucket_resource(const std::string& application,
                                                          const std::string& bucket) const
{
    auto id = store_.get(maps::kBucketMap, namespaced_bucket(application, bucket));
    return id ? std::optional<ResourceId>(id->get<ResourceId>()) : std::nullopt;
}

std::string StorageService::put_object(const std::filesystem::path& file, const std::string& application,
                                       const std::string& bucket)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        fail(Errc::IoFailure, "cannot read " + file.string());
    }
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return put_bytes(application, bucket, file_name_of(file.string()), bytes.str());
}

std::string StorageService::put_bytes(const std::string& application, const std::string& bucket,
                                      const std::string& object, std::string_view bytes)
{
    check_object_name(object);
    auto binding = bound(application, bucket);
    try {
        backend_.put_object(binding.resource, binding.namespaced, object, bytes);
    } catch (const Error& e) {
        fail(Errc::BackendWriteFailure, e.what(), {binding.resource.resource_id});
    }
    return ObjectUrl{application, bucket, binding.resource.resource_id, object}.render();
}

std::string StorageService::get_bytes(const std::string& url)
{
    auto parsed = ObjectUrl::parse(url);
    if (!parsed) {
        fail(Errc::MalformedUrl, "bad object url " + url);
    }
    auto owner = bucket_resource(parsed->application, parsed->bucket);
    if (!owner) {
        fail(Errc::UnknownObject, "no bucket behind " + url);
    }
    if (*owner != parsed->resource_id) {
        fail(Errc::MapMismatch,
             url + " names resource " + std::to_string(parsed->resource_id) + " but the bucket lives on " +
               std::to_string(*owner),
             {parsed->resource_id, *owner});
    }
    auto record = registry_.get(*owner);
    return backend_.get_object(record, namespaced_bucket(parsed->application, parsed->bucket),
                               parsed->object);
}

void StorageService::get_object(const std::string& url, const std::filesystem::path& file)
{
    auto bytes = get_bytes(url);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        fail(Errc::IoFailure, "cannot write " + file.string());
    }
}

void StorageService::delete_object(const std::string& object, const std::string& application,
                                   const std::string& bucket)
{
    auto binding = bound(application, bucket);
    backend_.delete_object(binding.resource, binding.namespaced, object);
}

std::vector<std::string> StorageService::list_objects(const std::string& application,
                                                      const std::string& bucket)
{
    auto binding = bound(application, bucket);
    auto names = backend_.list_objects(binding.resource, binding.namespaced);
    std::sort(names.begin(), names.end());
    return names;
}

} // namespace edgefaas
