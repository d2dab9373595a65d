#pragma once

#include "edgefaas/backends.hpp"

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace edgefaas {

// OpenFaaS-style gateway of each resource: /system/functions CRUD and
// /function/{name}, basic auth with the record's pwd.
class OpenFaasProvider final : public FaasProvider {
public:
    explicit OpenFaasProvider(std::string user = "admin",
                              std::chrono::milliseconds timeout = std::chrono::seconds(10));

    void deploy(const ResourceRecord& resource, const std::string& function,
                const DeploymentPackage& package) override;
    void remove(const ResourceRecord& resource, const std::string& function) override;
    FunctionDescription describe(const ResourceRecord& resource, const std::string& function) override;
    InvokeResult invoke(const ResourceRecord& resource, const std::string& function,
                        const std::string& body) override;

private:
    std::string user_;
    std::chrono::milliseconds timeout_;
};

// S3-compatible store on each resource's minio endpoint, path-style
// addressing, AWS Signature Version 4.
class S3ObjectStore final : public ObjectStore {
public:
    explicit S3ObjectStore(std::string region = "us-east-1",
                           std::chrono::milliseconds timeout = std::chrono::seconds(10));

    void make_bucket(const ResourceRecord& resource, const std::string& bucket) override;
    void remove_bucket(const ResourceRecord& resource, const std::string& bucket) override;
    void put_object(const ResourceRecord& resource, const std::string& bucket,
                    const std::string& object, std::string_view bytes) override;
    std::string get_object(const ResourceRecord& resource, const std::string& bucket,
                           const std::string& object) override;
    void delete_object(const ResourceRecord& resource, const std::string& bucket,
                       const std::string& object) override;
    std::vector<std::string> list_objects(const ResourceRecord& resource,
                                          const std::string& bucket) override;

private:
    std::string region_;
    std::chrono::milliseconds timeout_;
};

namespace sigv4 {

std::string sha256_hex(std::string_view data);
std::string hmac_sha256(std::string_view key, std::string_view data);  // raw bytes
// RFC 3986 encoding; '/' kept when encoding a path.
std::string uri_encode(std::string_view text, bool keep_slash);

struct Request {
    std::string method;
    std::string path;                                // unencoded
    std::map<std::string, std::string> query;        // unencoded
    std::map<std::string, std::string> headers;      // must include host and x-amz-date
    std::string payload_hash;
};

struct Credentials {
    std::string access_key;
    std::string secret_key;
    std::string region;
    std::string service = "s3";
};

std::string canonical_request(const Request& request);
std::string signature(const Request& request, const Credentials& credentials);
// Value of the Authorization header.
std::string authorization(const Request& request, const Credentials& credentials);
// yyyymmddThhmmssZ for the given time.
std::string amz_date(std::chrono::system_clock::time_point when);

} // namespace sigv4

} // namespace edgefaas
