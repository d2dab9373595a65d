#include "edgefaas/mapping_store.hpp"

#include "edgefaas/error.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

namespace edgefaas {

void MemoryKvBackend::put(const std::string& key, const std::string& value)
{
    std::lock_guard lock(mutex_);
    values_[key] = value;
}

std::optional<std::string> MemoryKvBackend::get(const std::string& key)
{
    std::lock_guard lock(mutex_);
    auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

FileKvBackend::FileKvBackend(std::filesystem::path directory)
  : directory_(std::move(directory))
{
    std::error_code ec;
    std::filesystem::create_directories(directory_, ec);
    if (ec) {
        fail(Errc::IoFailure, "cannot create store directory " + directory_.string());
    }
}

void FileKvBackend::put(const std::string& key, const std::string& value)
{
    std::lock_guard lock(mutex_);
    auto target = directory_ / (key + ".json");
    auto staging = directory_ / (key + ".json.tmp");
    {
        std::ofstream out(staging, std::ios::binary | std::ios::trunc);
        out << value;
        out.flush();
        if (!out) {
            fail(Errc::BackendWriteFailure, "cannot write " + staging.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(staging, target, ec);
    if (ec) {
        fail(Errc::BackendWriteFailure, "cannot replace " + target.string() + ": " + ec.message());
    }
}

std::optional<std::string> FileKvBackend::get(const std::string& key)
{
    std::lock_guard lock(mutex_);
    std::ifstream in(directory_ / (key + ".json"), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

MappingStore::MappingStore(std::shared_ptr<KvBackend> backend)
  : backend_(std::move(backend))
{
    for (auto name : maps::kAll) {
        auto& map = maps_[std::string(name)];
        auto raw = backend_->get(std::string(name));
        if (!raw) {
            continue;
        }
        auto parsed = json::parse(*raw, nullptr, false);
        if (parsed.is_discarded() || !parsed.is_object()) {
            spdlog::error("mapping '{}' is not decodable; refusing writes", name);
            corrupt_ = true;
            continue;
        }
        for (auto& [key, value] : parsed.items()) {
            map.entries.emplace(key, value);
        }
    }
}

MappingStore::NamedMap& MappingStore::slot(std::string_view map)
{
    auto it = maps_.find(map);
    if (it == maps_.end()) {
        throw std::invalid_argument("unknown mapping " + std::string(map));
    }
    return it->second;
}

const MappingStore::NamedMap& MappingStore::slot(std::string_view map) const
{
    auto it = maps_.find(map);
    if (it == maps_.end()) {
        throw std::invalid_argument("unknown mapping " + std::string(map));
    }
    return it->second;
}

void MappingStore::persist(std::string_view map, const MapContents& contents)
{
    if (corrupt_) {
        fail(Errc::CorruptStore, "mapping store failed to load; writes are disabled");
    }
    json document = json::object();
    for (const auto& [key, value] : contents) {
        document[key] = value;
    }
    backend_->put(std::string(map), document.dump());
}

std::optional<json> MappingStore::get(std::string_view map, const std::string& key) const
{
    const auto& named = slot(map);
    std::shared_lock lock(named.mutex);
    auto it = named.entries.find(key);
    if (it == named.entries.end()) {
        return std::nullopt;
    }
    return it->second;
}

MapContents MappingStore::entries(std::string_view map) const
{
    const auto& named = slot(map);
    std::shared_lock lock(named.mutex);
    return named.entries;
}

bool MappingStore::contains(std::string_view map, const std::string& key) const
{
    const auto& named = slot(map);
    std::shared_lock lock(named.mutex);
    return named.entries.count(key) != 0;
}

void MappingStore::put(std::string_view map, const std::string& key, json value)
{
    update(map, [&](MapContents& contents) { contents[key] = std::move(value); });
}

bool MappingStore::erase(std::string_view map, const std::string& key)
{
    bool erased = false;
    update(map, [&](MapContents& contents) { erased = contents.erase(key) != 0; });
    return erased;
}

void MappingStore::update(std::string_view map, const std::function<void(MapContents&)>& mutate)
{
    auto& named = slot(map);
    std::unique_lock lock(named.mutex);
    MapContents next = named.entries;
    mutate(next);
    persist(map, next);
    named.entries = std::move(next);
}

json MappingStore::snapshot() const
{
    json out = json::object();
    for (const auto& [name, named] : maps_) {
        std::shared_lock lock(named.mutex);
        json map = json::object();
        for (const auto& [key, value] : named.entries) {
            map[key] = value;
        }
        out[name] = std::move(map);
    }
    return out;
}

} // namespace edgefaas
