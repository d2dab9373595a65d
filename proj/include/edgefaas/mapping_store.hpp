#pragma once

#include "edgefaas/util.hpp"

#include <json.hpp>

#include <array>
#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace edgefaas {

using json = nlohmann::json;

// Names of the control-plane mappings. They double as persistence keys.
namespace maps {
inline constexpr std::string_view kResourceMapping = "resource_mapping";
inline constexpr std::string_view kCandidateResource = "candidate_resource";
inline constexpr std::string_view kBucketMap = "bucket_map";
inline constexpr std::string_view kApplicationBucket = "application_bucket";
inline constexpr std::string_view kDagStore = "dag_store";

inline constexpr std::array<std::string_view, 5> kAll{
  kResourceMapping, kCandidateResource, kBucketMap, kApplicationBucket, kDagStore};
} // namespace maps

// Durable key/value backing: one value per mapping name.
class KvBackend {
public:
    virtual ~KvBackend() = default;

    // Returns only once the value is durable. Throws Error(BackendWriteFailure).
    virtual void put(const std::string& key, const std::string& value) = 0;
    virtual std::optional<std::string> get(const std::string& key) = 0;
};

// Survives a MappingStore restart as long as the shared_ptr is kept alive.
class MemoryKvBackend final : public KvBackend {
public:
    void put(const std::string& key, const std::string& value) override;
    std::optional<std::string> get(const std::string& key) override;

private:
    std::mutex mutex_;
    std::map<std::string, std::string> values_;
};

// One snapshot file per mapping, replaced atomically via rename.
class FileKvBackend final : public KvBackend {
public:
    explicit FileKvBackend(std::filesystem::path directory);

    void put(const std::string& key, const std::string& value) override;
    std::optional<std::string> get(const std::string& key) override;

    const std::filesystem::path& directory() const noexcept { return directory_; }

private:
    std::filesystem::path directory_;
    std::mutex mutex_;
};

// Generic HTTP key/value service: GET and PUT on <prefix><key>.
class HttpKvBackend final : public KvBackend {
public:
    explicit HttpKvBackend(Endpoint endpoint, std::string prefix = "/kv/");

    void put(const std::string& key, const std::string& value) override;
    std::optional<std::string> get(const std::string& key) override;

private:
    Endpoint endpoint_;
    std::string prefix_;
};

using MapContents = std::map<std::string, json>;

// In-memory mappings with write-through persistence. Each named map has a
// single writer at a time; readers share. A mutation is visible only after
// the backend acknowledged the new contents.
class MappingStore {
public:
    // Loads every mapping from the backend. Undecodable contents put the
    // store in a corrupt state: reads serve what could be loaded, writes throw
    // Error(CorruptStore).
    explicit MappingStore(std::shared_ptr<KvBackend> backend);

    MappingStore(const MappingStore&) = delete;
    MappingStore& operator=(const MappingStore&) = delete;

    std::optional<json> get(std::string_view map, const std::string& key) const;
    MapContents entries(std::string_view map) const;
    bool contains(std::string_view map, const std::string& key) const;

    void put(std::string_view map, const std::string& key, json value);
    bool erase(std::string_view map, const std::string& key);

    // Atomic read-modify-write of one whole map.
    void update(std::string_view map, const std::function<void(MapContents&)>& mutate);

    // Every map's contents, keyed by map name.
    json snapshot() const;

    bool corrupt() const noexcept { return corrupt_.load(); }

private:
    struct NamedMap {
        mutable std::shared_mutex mutex;
        MapContents entries;
    };

    NamedMap& slot(std::string_view map);
    const NamedMap& slot(std::string_view map) const;
    void persist(std::string_view map, const MapContents& contents);

    std::shared_ptr<KvBackend> backend_;
    std::map<std::string, NamedMap, std::less<>> maps_;
    std::atomic<bool> corrupt_{false};
};

} // namespace edgefaas
