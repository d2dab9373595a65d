#include "edgefaas/error.hpp"

namespace edgefaas {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::MalformedManifest: return "MalformedManifest";
    case Errc::DuplicateEndpoint: return "DuplicateEndpoint";
    case Errc::UnknownResource: return "UnknownResource";
    case Errc::ResourceBusy: return "ResourceBusy";
    case Errc::CorruptStore: return "CorruptStore";
    case Errc::MetricsUnavailable: return "MetricsUnavailable";
    case Errc::MismatchedResource: return "MismatchedResource";
    case Errc::CycleDetected: return "CycleDetected";
    case Errc::UnknownDependency: return "UnknownDependency";
    case Errc::DuplicateApplication: return "DuplicateApplication";
    case Errc::BadEntrypoint: return "BadEntrypoint";
    case Errc::InvalidField: return "InvalidField";
    case Errc::NoCandidates: return "NoCandidates";
    case Errc::NoTierCandidates: return "NoTierCandidates";
    case Errc::NoAnchors: return "NoAnchors";
    case Errc::UnknownPolicy: return "UnknownPolicy";
    case Errc::UnknownApplication: return "UnknownApplication";
    case Errc::UnknownFunction: return "UnknownFunction";
    case Errc::PartialDeployFailure: return "PartialDeployFailure";
    case Errc::PartialDeleteFailure: return "PartialDeleteFailure";
    case Errc::InvokeFailure: return "InvokeFailure";
    case Errc::NotASuccessor: return "NotASuccessor";
    case Errc::BarrierTimeout: return "BarrierTimeout";
    case Errc::UnknownInvocation: return "UnknownInvocation";
    case Errc::BadPackage: return "BadPackage";
    case Errc::InvalidBucketName: return "InvalidBucketName";
    case Errc::BucketExists: return "BucketExists";
    case Errc::PlacementFailed: return "PlacementFailed";
    case Errc::UnknownBucket: return "UnknownBucket";
    case Errc::BucketNotEmpty: return "BucketNotEmpty";
    case Errc::BackendWriteFailure: return "BackendWriteFailure";
    case Errc::MalformedUrl: return "MalformedUrl";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::MapMismatch: return "MapMismatch";
    case Errc::NoStorageCapacity: return "NoStorageCapacity";
    case Errc::Unreachable: return "Unreachable";
    case Errc::BackendRejected: return "BackendRejected";
    case Errc::NoLink: return "NoLink";
    case Errc::UnknownStage: return "UnknownStage";
    case Errc::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message, std::vector<ResourceId> resources)
  : std::runtime_error(std::string(to_string(code)) + ": " + message)
  , code_(code)
  , resources_(std::move(resources))
{
}

void fail(Errc code, const std::string& message, std::vector<ResourceId> resources)
{
    throw Error(code, message, std::move(resources));
}

} // namespace edgefaas
