#pragma once

#include "edgefaas/backends.hpp"
#include "edgefaas/mapping_store.hpp"
#include "edgefaas/registry.hpp"

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgefaas {

inline constexpr std::uint64_t kDefaultLargeDataThreshold = 10ull * 1024 * 1024;

// 3-63 chars of [a-z0-9-], starting and ending alphanumeric.
bool valid_bucket_name(std::string_view name) noexcept;
// Lowercased "<application>-<bucket>": the name the backend stores under.
std::string namespaced_bucket(std::string_view application, std::string_view bucket);

// Where a bucket's data should live. Functions are "application.function".
struct PlacementHints {
    std::optional<ResourceId> generator;
    std::optional<std::uint64_t> expected_volume;
    std::optional<ResourceId> producer;
    std::optional<ResourceId> consumer;
    std::optional<std::string> producer_function;
    std::optional<std::string> consumer_function;
};

class StorageService {
public:
    StorageService(MappingStore& store, Registry& registry, ObjectStore& backend,
                   std::uint64_t large_data_threshold = kDefaultLargeDataThreshold);

    // Generator first; then the producer for volumes above the threshold;
    // then the consumer; otherwise the smallest registered resource. Hinted
    // functions resolve to the smallest ID they are deployed on. Candidates
    // without free storage are skipped. Throws Error(NoStorageCapacity).
    ResourceId place_data(const std::string& application, const std::string& bucket,
                          const PlacementHints& hints) const;

    ResourceId create_bucket(const std::string& application, const std::string& bucket,
                             const PlacementHints& hints = {});
    void delete_bucket(const std::string& application, const std::string& bucket);
    std::vector<std::string> list_buckets(const std::string& application) const;
    std::optional<ResourceId> bucket_resource(const std::string& application,
                                              const std::string& bucket) const;

    // Uploads under the file's final path component; returns the object URL.
    std::string put_object(const std::filesystem::path& file, const std::string& application,
                           const std::string& bucket);
    std::string put_bytes(const std::string& application, const std::string& bucket,
                          const std::string& object, std::string_view bytes);

    void get_object(const std::string& url, const std::filesystem::path& file);
    std::string get_bytes(const std::string& url);

    void delete_object(const std::string& object, const std::string& application,
                       const std::string& bucket);
    std::vector<std::string> list_objects(const std::string& application, const std::string& bucket);

    std::uint64_t large_data_threshold() const noexcept { return threshold_; }

private:
    struct Binding {
        std::string namespaced;
        ResourceRecord resource;
    };
    Binding bound(const std::string& application, const std::string& bucket) const;
    bool has_room(const ResourceRecord& record) const;
    std::optional<ResourceId> function_home(const std::string& qualified) const;

    MappingStore& store_;
    Registry& registry_;
    ObjectStore& backend_;
    std::uint64_t threshold_;
    mutable std::mutex mutex_;
};

} // namespace edgefaas
