#pragma once

#include "edgefaas/registry.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgefaas {

// Stand-in stage bodies understood by the simulated provider.
enum class Behavior { Echo, FixedOutput, Delay, VectorAverage };

std::string_view to_string(Behavior behavior) noexcept;
std::optional<Behavior> behavior_from_name(std::string_view name) noexcept;

struct SyntheticSpec {
    Behavior behavior = Behavior::Echo;
    std::uint64_t output_size = 0;        // FixedOutput
    std::map<Tier, double> compute;       // seconds per tier

    friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

// Descriptor shipped inside the deployment archive as edgefaas.json.
struct PackageDescriptor {
    std::string handler;
    std::string image;
    std::map<std::string, std::string> labels;
    SyntheticSpec synthetic;

    friend bool operator==(const PackageDescriptor&, const PackageDescriptor&) = default;
};

inline constexpr std::string_view kDescriptorName = "edgefaas.json";

json to_json(const PackageDescriptor& descriptor);
PackageDescriptor descriptor_from_json(const json& value);

struct DeploymentPackage {
    std::string location;  // path of the .zip archive
    PackageDescriptor descriptor;
};

// Reads a .zip deployment archive and its descriptor. Throws Error(BadPackage).
DeploymentPackage load_package(const std::filesystem::path& archive);
// Same, from archive bytes already in memory.
DeploymentPackage package_from_archive(std::string_view archive, std::string location);

// Writes an archive holding the descriptor plus `files`.
void write_package(const std::filesystem::path& archive, const PackageDescriptor& descriptor,
                   const std::map<std::string, std::string>& files = {});

// Minimal zip container support: stored and deflated entries on read, stored
// entries on write. Throws Error(BadPackage) on malformed input.
std::map<std::string, std::string> read_zip(std::string_view archive);
std::string write_zip(const std::map<std::string, std::string>& files);

struct FunctionDescription {
    std::string name;
    std::string status;
    std::uint32_t replicas = 0;
    std::uint64_t invocation_count = 0;
    std::string image;
    std::string url;
    std::map<std::string, std::string> labels;
};

json to_json(const FunctionDescription& description);

struct InvokeResult {
    std::string output;
    double latency_seconds = 0.0;  // virtual compute latency on the simulator
};

// FaaS gateway of one resource. Failures throw Error(Unreachable) or
// Error(BackendRejected).
class FaasProvider {
public:
    virtual ~FaasProvider() = default;

    virtual void deploy(const ResourceRecord& resource, const std::string& function,
                        const DeploymentPackage& package) = 0;
    virtual void remove(const ResourceRecord& resource, const std::string& function) = 0;
    virtual FunctionDescription describe(const ResourceRecord& resource,
                                         const std::string& function) = 0;
    virtual InvokeResult invoke(const ResourceRecord& resource, const std::string& function,
                                const std::string& body) = 0;
};

// Object store of one resource, addressed by namespaced bucket names.
class ObjectStore {
public:
    virtual ~ObjectStore() = default;

    virtual void make_bucket(const ResourceRecord& resource, const std::string& bucket) = 0;
    // Throws Error(BucketNotEmpty) or Error(UnknownBucket).
    virtual void remove_bucket(const ResourceRecord& resource, const std::string& bucket) = 0;
    virtual void put_object(const ResourceRecord& resource, const std::string& bucket,
                            const std::string& object, std::string_view bytes) = 0;
    // Throws Error(UnknownObject).
    virtual std::string get_object(const ResourceRecord& resource, const std::string& bucket,
                                   const std::string& object) = 0;
    virtual void delete_object(const ResourceRecord& resource, const std::string& bucket,
                               const std::string& object) = 0;
    virtual std::vector<std::string> list_objects(const ResourceRecord& resource,
                                                  const std::string& bucket) = 0;

    // Bytes currently stored on the resource, when the backend can tell.
    virtual std::optional<std::uint64_t> bytes_used(const ResourceRecord&) { return std::nullopt; }
};

} // namespace edgefaas
