// Every backend that talks HTTP lives here so httplib is compiled once.
#include "edgefaas/http_backends.hpp"

#include "edgefaas/mapping_store.hpp"
#include "edgefaas/metrics.hpp"
#include "edgefaas/util.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <sstream>

namespace edgefaas {

namespace {

std::unique_ptr<httplib::Client> client_for(const std::string& endpoint_text, std::chrono::milliseconds timeout,
                                            Errc unreachable, ResourceId id)
{
    auto endpoint = parse_endpoint(endpoint_text);
    if (!endpoint) {
        fail(unreachable, "bad endpoint " + endpoint_text, {id});
    }
    auto cli = std::make_unique<httplib::Client>(endpoint->host, endpoint->port);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli->set_connection_timeout(secs.count(), usecs.count());
    cli->set_read_timeout(secs.count(), usecs.count());
    cli->set_write_timeout(secs.count(), usecs.count());
    return cli;
}

bool ok(int status)
{
    return status >= 200 && status < 300;
}

std::string hex(const unsigned char* data, std::size_t size)
{
    std::ostringstream out;
    out << std::hex << std::setfill('0');
    for (std::size_t i = 0; i < size; ++i) {
        out << std::setw(2) << static_cast<int>(data[i]);
    }
    return out.str();
}

// OpenFaaS service names are DNS labels.
std::string service_name(const std::string& function)
{
    auto out = to_lower(function);
    std::replace(out.begin(), out.end(), '.', '-');
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
}

std::string xml_unescape(std::string_view text)
{
    static const std::pair<std::string_view, char> entities[] = {
      {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&apos;", '\''}};
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
        bool replaced = false;
        if (text[i] == '&') {
            for (const auto& [entity, c] : entities) {
                if (text.substr(i, entity.size()) == entity) {
                    out.push_back(c);
                    i += entity.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back(text[i++]);
        }
    }
    return out;
}

std::vector<std::string> xml_values(std::string_view xml, std::string_view tag)
{
    std::vector<std::string> out;
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    std::size_t pos = 0;
    while ((pos = xml.find(open, pos)) != std::string_view::npos) {
        auto start = pos + open.size();
        auto end = xml.find(close, start);
        if (end == std::string_view::npos) {
            break;
        }
        out.push_back(xml_unescape(xml.substr(start, end - start)));
        pos = end + close.size();
    }
    return out;
}

} // namespace

// --- sigv4 ------------------------------------------------------------------

namespace sigv4 {

std::string sha256_hex(std::string_view data)
{
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    return hex(digest, sizeof digest);
}

std::string hmac_sha256(std::string_view key, std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int size = 0;
    HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
         reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest, &size);
    return std::string(reinterpret_cast<char*>(digest), size);
}

std::string uri_encode(std::string_view text, bool keep_slash)
{
    std::ostringstream out;
    out << std::uppercase << std::hex << std::setfill('0');
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || (keep_slash && c == '/')) {
            out << c;
        } else {
            out << '%' << std::setw(2) << static_cast<int>(c);
        }
    }
    return out.str();
}

namespace {

std::string header_name(const std::string& name)
{
    return to_lower(name);
}

std::string signed_headers(const Request& r)
{
    std::vector<std::string> names;
    for (const auto& [name, value] : r.headers) {
        names.push_back(header_name(name));
    }
    std::sort(names.begin(), names.end());
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out += (i ? ";" : "") + names[i];
    }
    return out;
}

std::string scope(const Request& r, const Credentials& c)
{
    auto date = r.headers.count("x-amz-date") ? r.headers.at("x-amz-date") : std::string{};
    return date.substr(0, 8) + "/" + c.region + "/" + c.service + "/aws4_request";
}

} // namespace

std::string canonical_request(const Request& r)
{
    std::vector<std::pair<std::string, std::string>> query;
    for (const auto& [k, v] : r.query) {
        query.emplace_back(uri_encode(k, false), uri_encode(v, false));
    }
    std::sort(query.begin(), query.end());
    std::string canonical_query;
    for (std::size_t i = 0; i < query.size(); ++i) {
        canonical_query += (i ? "&" : "") + query[i].first + "=" + query[i].second;
    }
    std::vector<std::pair<std::string, std::string>> headers;
    for (const auto& [name, value] : r.headers) {
        headers.emplace_back(header_name(name), std::string(trim(value)));
    }
    std::sort(headers.begin(), headers.end());
    std::string canonical_headers;
    for (const auto& [name, value] : headers) {
        canonical_headers += name + ":" + value + "\n";
    }
    return r.method + "\n" + uri_encode(r.path.empty() ? "/" : r.path, true) + "\n" + canonical_query + "\n" +
           canonical_headers + "\n" + signed_headers(r) + "\n" + r.payload_hash;
}

std::string signature(const Request& r, const Credentials& c)
{
    auto date_time = r.headers.count("x-amz-date") ? r.headers.at("x-amz-date") : std::string{};
    auto string_to_sign = "AWS4-HMAC-SHA256\n" + date_time + "\n" + scope(r, c) + "\n" +
                          sha256_hex(canonical_request(r));
    auto key = hmac_sha256("AWS4" + c.secret_key, date_time.substr(0, 8));
    key = hmac_sha256(key, c.region);
    key = hmac_sha256(key, c.service);
    key = hmac_sha256(key, "aws4_request");
    auto raw = hmac_sha256(key, string_to_sign);
    return hex(reinterpret_cast<const unsigned char*>(raw.data()), raw.size());
}

std::string authorization(const Request& r, const Credentials& c)
{
    return "AWS4-HMAC-SHA256 Credential=" + c.access_key + "/" + scope(r, c) +
           ", SignedHeaders=" + signed_headers(r) + ", Signature=" + signature(r, c);
}

std::string amz_date(std::chrono::system_clock::time_point when)
{
    auto t = std::chrono::system_clock::to_time_t(when);
    std::tm utc{};
    gmtime_r(&t, &utc);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y%m%dT%H%M%SZ", &utc);
    return buffer;
}

} // namespace sigv4

// --- key/value --------------------------------------------------------------

HttpKvBackend::HttpKvBackend(Endpoint endpoint, std::string prefix)
  : endpoint_(std::move(endpoint))
  , prefix_(std::move(prefix))
{
}

void HttpKvBackend::put(const std::string& key, const std::string& value)
{
    httplib::Client cli(endpoint_.host, endpoint_.port);
    auto res = cli.Put(prefix_ + key, value, "application/json");
    if (!res || !ok(res->status)) {
        fail(Errc::BackendWriteFailure, "kv store did not acknowledge " + key);
    }
}

std::optional<std::string> HttpKvBackend::get(const std::string& key)
{
    httplib::Client cli(endpoint_.host, endpoint_.port);
    auto res = cli.Get(prefix_ + key);
    if (!res) {
        fail(Errc::Unreachable, "kv store at " + endpoint_.str() + " unreachable");
    }
    if (res->status == 404) {
        return std::nullopt;
    }
    if (!ok(res->status)) {
        fail(Errc::BackendRejected, "kv store answered " + std::to_string(res->status));
    }
    return res->body;
}

// --- prometheus -------------------------------------------------------------

PrometheusMetricsProvider::PrometheusMetricsProvider(Queries queries, MonotonicClock clock,
                                                     std::chrono::milliseconds timeout)
  : queries_(std::move(queries))
  , clock_(std::move(clock))
  , timeout_(timeout)
{
}

MetricsSnapshot PrometheusMetricsProvider::fetch(const ResourceRecord& resource)
{
    auto cli = client_for(resource.prometheus, timeout_, Errc::MetricsUnavailable, resource.resource_id);
    auto query = [&](const std::string& expr) {
        auto res = cli->Get("/api/v1/query", httplib::Params{{"query", expr}}, httplib::Headers{});
        if (!res || !ok(res->status)) {
            fail(Errc::MetricsUnavailable, "prometheus of resource " + std::to_string(resource.resource_id) +
                                             " unreachable",
                 {resource.resource_id});
        }
        auto body = json::parse(res->body, nullptr, false);
        if (body.is_discarded() || body.value("status", "") != "success") {
            fail(Errc::MetricsUnavailable, "bad prometheus answer", {resource.resource_id});
        }
        std::vector<double> values;
        for (const auto& sample : body["data"]["result"]) {
            values.push_back(std::stod(sample.at("value").at(1).get<std::string>()));
        }
        return values;
    };
    auto first = [&](const std::string& expr) {
        auto values = query(expr);
        return values.empty() ? 0.0 : values.front();
    };
    MetricsSnapshot snap;
    snap.resource_id = resource.resource_id;
    try {
        snap.cpu_used = std::clamp(first(queries_.cpu_used), 0.0, resource.total_cpu());
        snap.memory_used = static_cast<std::uint64_t>(
          std::clamp(first(queries_.memory_used), 0.0, static_cast<double>(resource.total_memory())));
        snap.io_bandwidth_used = std::max(0.0, first(queries_.io_bandwidth_used));
        snap.gpu_used = std::clamp(first(queries_.gpu_used), 0.0, resource.total_gpu());
        auto loads = query(queries_.per_node_load);
        loads.resize(resource.node, 0.0);
        for (auto& l : loads) {
            l = std::clamp(l, 0.0, 1.0);
        }
        snap.per_node_load = loads;
    } catch (const json::exception& e) {
        fail(Errc::MetricsUnavailable, std::string("malformed prometheus sample: ") + e.what(),
             {resource.resource_id});
    } catch (const std::logic_error& e) {
        fail(Errc::MetricsUnavailable, std::string("malformed prometheus value: ") + e.what(),
             {resource.resource_id});
    }
    snap.timestamp = clock_();
    return snap;
}

// --- openfaas ---------------------------------------------------------------

OpenFaasProvider::OpenFaasProvider(std::string user, std::chrono::milliseconds timeout)
  : user_(std::move(user))
  , timeout_(timeout)
{
}

namespace {

[[noreturn]] void gateway_failure(const httplib::Result& res, const ResourceRecord& r, const std::string& what)
{
    if (!res) {
        fail(Errc::Unreachable, "gateway of resource " + std::to_string(r.resource_id) + " unreachable",
             {r.resource_id});
    }
    fail(Errc::BackendRejected, what + ": " + std::to_string(res->status) + " " + res->body, {r.resource_id});
}

} // namespace

void OpenFaasProvider::deploy(const ResourceRecord& resource, const std::string& function,
                              const DeploymentPackage& package)
{
    auto cli = client_for(resource.gateway, timeout_, Errc::Unreachable, resource.resource_id);
    cli->set_basic_auth(user_, resource.pwd);
    json body{{"service", service_name(function)},
              {"image", package.descriptor.image},
              {"envProcess", package.descriptor.handler},
              {"labels", package.descriptor.labels}};
    auto res = cli->Post("/system/functions", body.dump(), "application/json");
    if (res && ok(res->status)) {
        return;
    }
    if (res && (res->status == 409 || res->body.find("already exists") != std::string::npos)) {
        res = cli->Put("/system/functions", body.dump(), "application/json");
        if (res && ok(res->status)) {
            return;
        }
    }
    gateway_failure(res, resource, "deploy " + function);
}

void OpenFaasProvider::remove(const ResourceRecord& resource, const std::string& function)
{
    auto cli = client_for(resource.gateway, timeout_, Errc::Unreachable, resource.resource_id);
    cli->set_basic_auth(user_, resource.pwd);
    json body{{"functionName", service_name(function)}};
    auto res = cli->Delete("/system/functions", body.dump(), "application/json");
    if (!res || !ok(res->status)) {
        gateway_failure(res, resource, "remove " + function);
    }
}

FunctionDescription OpenFaasProvider::describe(const ResourceRecord& resource, const std::string& function)
{
    auto cli = client_for(resource.gateway, timeout_, Errc::Unreachable, resource.resource_id);
    cli->set_basic_auth(user_, resource.pwd);
    auto res = cli->Get("/system/function/" + service_name(function));
    if (!res || !ok(res->status)) {
        gateway_failure(res, resource, "describe " + function);
    }
    auto body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        fail(Errc::BackendRejected, "describe answer is not JSON", {resource.resource_id});
    }
    FunctionDescription d;
    d.name = function;
    auto available = body.value("availableReplicas", 0);
    d.status = available > 0 ? "Ready" : "Not Ready";
    d.replicas = body.value("replicas", 0u);
    d.invocation_count = static_cast<std::uint64_t>(body.value("invocationCount", 0.0));
    d.image = body.value("image", std::string{});
    d.url = "http://" + resource.gateway + "/function/" + service_name(function);
    if (body.contains("labels") && body["labels"].is_object()) {
        d.labels = body["labels"].get<std::map<std::string, std::string>>();
    }
    return d;
}

InvokeResult OpenFaasProvider::invoke(const ResourceRecord& resource, const std::string& function,
                                      const std::string& body)
{
    auto cli = client_for(resource.gateway, timeout_, Errc::Unreachable, resource.resource_id);
    auto start = std::chrono::steady_clock::now();
    auto res = cli->Post("/function/" + service_name(function), body, "application/json");
    if (!res || !ok(res->status)) {
        gateway_failure(res, resource, "invoke " + function);
    }
    InvokeResult out;
    out.output = res->body;
    out.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

// --- s3 ---------------------------------------------------------------------

S3ObjectStore::S3ObjectStore(std::string region, std::chrono::milliseconds timeout)
  : region_(std::move(region))
  , timeout_(timeout)
{
}

namespace {

struct S3Call {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

httplib::Result s3_send(const ResourceRecord& r, const std::string& region, std::chrono::milliseconds timeout,
                        const S3Call& call)
{
    auto cli = client_for(r.minio, timeout, Errc::Unreachable, r.resource_id);
    sigv4::Request req;
    req.method = call.method;
    req.path = call.path;
    req.query = call.query;
    req.payload_hash = sigv4::sha256_hex(call.body);
    req.headers["host"] = r.minio;
    req.headers["x-amz-date"] = sigv4::amz_date(std::chrono::system_clock::now());
    req.headers["x-amz-content-sha256"] = req.payload_hash;
    sigv4::Credentials creds{r.minio_access_key, r.minio_secret_key, region, "s3"};

    httplib::Headers headers{{"x-amz-date", req.headers["x-amz-date"]},
                             {"x-amz-content-sha256", req.payload_hash},
                             {"Authorization", sigv4::authorization(req, creds)}};
    auto target = sigv4::uri_encode(call.path, true);
    if (!call.query.empty()) {
        std::string q;
        for (const auto& [k, v] : call.query) {
            q += (q.empty() ? "?" : "&") + sigv4::uri_encode(k, false) + "=" + sigv4::uri_encode(v, false);
        }
        target += q;
    }
    if (call.method == "GET") {
        return cli->Get(target, headers);
    }
    if (call.method == "PUT") {
        return cli->Put(target, headers, call.body, "application/octet-stream");
    }
    if (call.method == "HEAD") {
        return cli->Head(target, headers);
    }
    return cli->Delete(target, headers);
}

std::string s3_error_code(const std::string& body)
{
    auto codes = xml_values(body, "Code");
    return codes.empty() ? std::string{} : codes.front();
}

[[noreturn]] void s3_failure(const httplib::Result& res, const ResourceRecord& r, const std::string& what)
{
    if (!res) {
        fail(Errc::Unreachable, "object store of resource " + std::to_string(r.resource_id) + " unreachable",
             {r.resource_id});
    }
    auto code = s3_error_code(res->body);
    if (code == "BucketNotEmpty") {
        fail(Errc::BucketNotEmpty, what + ": bucket not empty", {r.resource_id});
    }
    if (code == "NoSuchBucket") {
        fail(Errc::UnknownBucket, what + ": no such bucket", {r.resource_id});
    }
    if (code == "NoSuchKey" || res->status == 404) {
        fail(Errc::UnknownObject, what + ": no such object", {r.resource_id});
    }
    if (code == "BucketAlreadyOwnedByYou" || code == "BucketAlreadyExists") {
        fail(Errc::BucketExists, what + ": bucket exists", {r.resource_id});
    }
    fail(Errc::BackendRejected, what + ": " + std::to_string(res->status) + " " + code, {r.resource_id});
}

} // namespace

void S3ObjectStore::make_bucket(const ResourceRecord& resource, const std::string& bucket)
{
    auto res = s3_send(resource, region_, timeout_, {"PUT", "/" + bucket, {}, {}});
    if (!res || !ok(res->status)) {
        s3_failure(res, resource, "make bucket " + bucket);
    }
}

void S3ObjectStore::remove_bucket(const ResourceRecord& resource, const std::string& bucket)
{
    auto res = s3_send(resource, region_, timeout_, {"DELETE", "/" + bucket, {}, {}});
    if (!res || !ok(res->status)) {
        if (res && res->status == 404) {
            fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
        }
        s3_failure(res, resource, "remove bucket " + bucket);
    }
}

void S3ObjectStore::put_object(const ResourceRecord& resource, const std::string& bucket,
                               const std::string& object, std::string_view bytes)
{
    auto res = s3_send(resource, region_, timeout_, {"PUT", "/" + bucket + "/" + object, {}, std::string(bytes)});
    if (!res || !ok(res->status)) {
        s3_failure(res, resource, "put " + object);
    }
}

std::string S3ObjectStore::get_object(const ResourceRecord& resource, const std::string& bucket,
                                      const std::string& object)
{
    auto res = s3_send(resource, region_, timeout_, {"GET", "/" + bucket + "/" + object, {}, {}});
    if (!res || !ok(res->status)) {
        if (res && res->status == 404) {
            fail(Errc::UnknownObject, "no object " + object, {resource.resource_id});
        }
        s3_failure(res, resource, "get " + object);
    }
    return res->body;
}

void S3ObjectStore::delete_object(const ResourceRecord& resource, const std::string& bucket,
                                  const std::string& object)
{
    // S3 deletes are idempotent; probe first so a missing object is reported.
    auto head = s3_send(resource, region_, timeout_, {"HEAD", "/" + bucket + "/" + object, {}, {}});
    if (!head || !ok(head->status)) {
        if (head && head->status == 404) {
            fail(Errc::UnknownObject, "no object " + object, {resource.resource_id});
        }
        s3_failure(head, resource, "delete " + object);
    }
    auto res = s3_send(resource, region_, timeout_, {"DELETE", "/" + bucket + "/" + object, {}, {}});
    if (!res || !ok(res->status)) {
        s3_failure(res, resource, "delete " + object);
    }
}

std::vector<std::string> S3ObjectStore::list_objects(const ResourceRecord& resource, const std::string& bucket)
{
    std::vector<std::string> out;
    std::string token;
    for (;;) {
        std::map<std::string, std::string> query{{"list-type", "2"}};
        if (!token.empty()) {
            query["continuation-token"] = token;
        }
        auto res = s3_send(resource, region_, timeout_, {"GET", "/" + bucket, query, {}});
        if (!res || !ok(res->status)) {
            if (res && res->status == 404) {
                fail(Errc::UnknownBucket, "no bucket " + bucket, {resource.resource_id});
            }
            s3_failure(res, resource, "list " + bucket);
        }
        auto keys = xml_values(res->body, "Key");
        out.insert(out.end(), keys.begin(), keys.end());
        auto truncated = xml_values(res->body, "IsTruncated");
        auto next = xml_values(res->body, "NextContinuationToken");
        if (truncated.empty() || truncated.front() != "true" || next.empty()) {
            break;
        }
        token = next.front();
    }
    return out;
}

} // namespace edgefaas
