#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgefaas {

using ResourceId = std::uint32_t;

// Every failure the control plane reports. The gateway maps these onto HTTP
// status codes and the CLI onto exit codes, so keep the list stable.
enum class Errc {
    // registry
    MalformedManifest,
    DuplicateEndpoint,
    UnknownResource,
    ResourceBusy,
    CorruptStore,
    // metrics
    MetricsUnavailable,
    MismatchedResource,
    // appmodel
    CycleDetected,
    UnknownDependency,
    DuplicateApplication,
    BadEntrypoint,
    InvalidField,
    // scheduler
    NoCandidates,
    NoTierCandidates,
    NoAnchors,
    UnknownPolicy,
    // functions
    UnknownApplication,
    UnknownFunction,
    PartialDeployFailure,
    PartialDeleteFailure,
    InvokeFailure,
    NotASuccessor,
    BarrierTimeout,
    UnknownInvocation,
    BadPackage,
    // storage
    InvalidBucketName,
    BucketExists,
    PlacementFailed,
    UnknownBucket,
    BucketNotEmpty,
    BackendWriteFailure,
    MalformedUrl,
    UnknownObject,
    MapMismatch,
    NoStorageCapacity,
    // backends
    Unreachable,
    BackendRejected,
    NoLink,
    // harness
    UnknownStage,
    IoFailure,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::vector<ResourceId> resources = {});

    Errc code() const noexcept { return code_; }

    // Resources involved in the failure: failed deploy/delete targets, the
    // scheduled resource of a failed invocation, and so on.
    const std::vector<ResourceId>& resource_ids() const noexcept { return resources_; }

private:
    Errc code_;
    std::vector<ResourceId> resources_;
};

[[noreturn]] void fail(Errc code, const std::string& message, std::vector<ResourceId> resources = {});

} // namespace edgefaas
