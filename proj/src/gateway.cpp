#include "edgefaas/gateway.hpp"

#include "edgefaas/object_url.hpp"
#include "edgefaas/util.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>

namespace edgefaas {

int http_status(Errc code) noexcept
{
    switch (code) {
    case Errc::UnknownResource:
    case Errc::UnknownApplication:
    case Errc::UnknownFunction:
    case Errc::UnknownInvocation:
    case Errc::UnknownBucket:
    case Errc::UnknownObject:
    case Errc::UnknownStage:
        return 404;
    case Errc::DuplicateEndpoint:
    case Errc::ResourceBusy:
    case Errc::DuplicateApplication:
    case Errc::BucketExists:
    case Errc::BucketNotEmpty:
    case Errc::MapMismatch:
    case Errc::BarrierTimeout:
        return 409;
    case Errc::MalformedManifest:
    case Errc::CycleDetected:
    case Errc::UnknownDependency:
    case Errc::BadEntrypoint:
    case Errc::InvalidField:
    case Errc::NoCandidates:
    case Errc::NoTierCandidates:
    case Errc::NoAnchors:
    case Errc::UnknownPolicy:
    case Errc::NotASuccessor:
    case Errc::BadPackage:
    case Errc::InvalidBucketName:
    case Errc::MalformedUrl:
    case Errc::NoStorageCapacity:
        return 422;
    case Errc::CorruptStore:
        return 503;
    case Errc::IoFailure:
        return 500;
    case Errc::MetricsUnavailable:
    case Errc::MismatchedResource:
    case Errc::PartialDeployFailure:
    case Errc::PartialDeleteFailure:
    case Errc::InvokeFailure:
    case Errc::PlacementFailed:
    case Errc::BackendWriteFailure:
    case Errc::Unreachable:
    case Errc::BackendRejected:
    case Errc::NoLink:
        return 502;
    }
    return 500;
}

std::optional<std::string> GatewayRequest::param(const std::string& key) const
{
    auto it = query.find(key);
    if (it == query.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool GatewayRequest::flag(const std::string& key) const
{
    auto v = param(key);
    if (!v) {
        return false;
    }
    auto s = to_lower(*v);
    return s.empty() || s == "1" || s == "true" || s == "yes";
}

json GatewayResponse::as_json() const
{
    return json::parse(body);
}

namespace {

GatewayResponse reply(int status, const json& body)
{
    return {status, body.dump(), "application/json"};
}

json body_json(const GatewayRequest& r)
{
    if (r.body.empty()) {
        return json::object();
    }
    auto parsed = json::parse(r.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
        fail(Errc::InvalidField, "request body must be a JSON object");
    }
    return parsed;
}

template <typename T>
T field(const json& body, const char* key)
{
    if (!body.contains(key)) {
        fail(Errc::InvalidField, std::string("missing field ") + key);
    }
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        fail(Errc::InvalidField, std::string("wrong type for field ") + key);
    }
}

template <typename T>
T field_or(const json& body, const char* key, T fallback)
{
    if (!body.contains(key) || body.at(key).is_null()) {
        return fallback;
    }
    return field<T>(body, key);
}

std::pair<std::string, std::string> qualified(const std::string& text)
{
    auto parts = split_qualified(text);
    if (!parts) {
        fail(Errc::InvalidField, "function must be application.function");
    }
    return *parts;
}

ResourceId resource_id(const std::string& text)
{
    try {
        std::size_t used = 0;
        auto v = std::stoul(text, &used);
        if (used == text.size() && v <= std::numeric_limits<ResourceId>::max()) {
            return static_cast<ResourceId>(v);
        }
    } catch (const std::exception&) {
    }
    fail(Errc::InvalidField, "bad resource id " + text);
}

PlacementHints hints_from(const json& h)
{
    PlacementHints hints;
    if (!h.is_object()) {
        return hints;
    }
    if (h.contains("generator")) hints.generator = field<ResourceId>(h, "generator");
    if (h.contains("expected_volume")) hints.expected_volume = field<std::uint64_t>(h, "expected_volume");
    if (h.contains("producer")) hints.producer = field<ResourceId>(h, "producer");
    if (h.contains("consumer")) hints.consumer = field<ResourceId>(h, "consumer");
    if (h.contains("producer_function")) hints.producer_function = field<std::string>(h, "producer_function");
    if (h.contains("consumer_function")) hints.consumer_function = field<std::string>(h, "consumer_function");
    return hints;
}

json outcome_json(const InvocationResult& result)
{
    json outcomes = json::array();
    for (const auto& o : result.outcomes) {
        outcomes.push_back({{"resource_id", o.resource_id},
                            {"output", envelope_payload(o.output)},
                            {"latency_seconds", o.latency_seconds}});
    }
    return {{"invocation_id", result.invocation_id}, {"outcomes", outcomes}};
}

std::string to_string(AsyncState s)
{
    switch (s) {
    case AsyncState::Pending: return "pending";
    case AsyncState::Done: return "done";
    case AsyncState::Failed: return "failed";
    }
    return "pending";
}

json placements_json(const std::map<std::string, std::vector<ResourceId>>& placements)
{
    json out = json::object();
    for (const auto& [fn, ids] : placements) {
        out[fn] = ids;
    }
    return out;
}

json node_placements_json(const std::map<std::string, std::vector<FabricNodeId>>& placements)
{
    json out = json::object();
    for (const auto& [fn, ids] : placements) {
        out[fn] = ids;
    }
    return out;
}

// Isolated platform for one experiment run.
struct Scratch {
    std::shared_ptr<SimFabric> fabric;
    std::unique_ptr<Platform> platform;

    Scratch(FabricTopology topology, const GatewayConfig& base)
      : fabric(std::make_shared<SimFabric>(std::move(topology)))
    {
        GatewayConfig cfg = base;
        cfg.store_backend = "memory";
        platform = std::make_unique<Platform>(cfg, simulated_backends(fabric, std::make_shared<MemoryKvBackend>()));
    }
};

} // namespace

json to_json(const LatencyBreakdown& b)
{
    json stages = json::array();
    for (const auto& s : b.stages) {
        stages.push_back({{"stage", s.stage},
                          {"tier", std::string(to_string(s.tier))},
                          {"compute", s.compute},
                          {"transfer", s.transfer}});
    }
    return {{"partition", b.partition},
            {"total", b.total},
            {"compute_total", b.compute_total},
            {"transfer_total", b.transfer_total},
            {"stages", stages}};
}

json to_json(const PartitionReport& report)
{
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back(to_json(r));
    }
    json out{{"rows", rows}, {"argmin", nullptr}};
    if (report.argmin) {
        out["argmin"] = report.rows[*report.argmin].partition;
    }
    return out;
}

json to_json(const Trace& trace)
{
    json events = json::array();
    for (const auto& e : trace.events) {
        events.push_back({{"task", e.task}, {"resource", e.resource}, {"start", e.start}, {"finish", e.finish}});
    }
    return {{"makespan", trace.makespan}, {"events", events}};
}

Gateway::Gateway(Platform& platform, std::optional<FabricTopology> fabric, std::optional<LatencyProfile> profile)
  : platform_(platform)
  , fabric_(std::move(fabric))
  , profile_(std::move(profile))
{
    const std::string name = R"(([^/]+))";
    const std::string fn = R"(([^/]+\.[^/]+))";

    add("GET", "/healthz", [](auto&, auto&) { return reply(200, {{"status", "ok"}}); });

    add("POST", "/system/resources", [this](auto& r, auto&) { return register_resource(r); });
    add("GET", "/system/resources", [this](auto& r, auto&) { return list_resources(r); });
    add("GET", "/system/resources/" + name, [this](auto&, auto& m) { return get_resource(m); });
    add("DELETE", "/system/resources/" + name, [this](auto&, auto& m) { return unregister_resource(m); });

    add("POST", "/system/applications", [this](auto& r, auto&) { return register_application(r); });
    add("GET", "/system/applications", [this](auto&, auto&) { return list_applications(); });
    add("GET", "/system/applications/" + name, [this](auto&, auto& m) { return get_application(m); });

    add("POST", "/system/schedule", [this](auto& r, auto&) { return schedule(r); });
    add("POST", "/system/functions", [this](auto& r, auto&) { return deploy_function(r); });
    add("GET", "/system/functions", [this](auto& r, auto&) { return list_functions(r); });
    add("GET", "/system/functions/" + fn, [this](auto&, auto& m) { return get_function(m); });
    add("DELETE", "/system/functions/" + fn, [this](auto&, auto& m) { return delete_function(m); });

    add("POST", "/function/" + fn, [this](auto& r, auto& m) { return invoke(r, m, true); });
    add("POST", "/async-function/" + fn, [this](auto& r, auto& m) { return invoke(r, m, false); });
    add("GET", "/system/invocations/" + name, [this](auto&, auto& m) { return poll(m); });
    add("POST", "/system/chain", [this](auto& r, auto&) { return chain(r); });

    const std::string app = "/system/storage/" + name;
    add("GET", "/system/storage/objects/" + name + "/" + name + "/" + name + "/" + name,
        [this](auto&, auto& m) { return get_object(m); });
    add("POST", app + "/buckets", [this](auto& r, auto& m) { return create_bucket(r, m); });
    add("GET", app + "/buckets", [this](auto&, auto& m) { return list_buckets(m); });
    add("DELETE", app + "/buckets/" + name, [this](auto&, auto& m) { return delete_bucket(m); });
    add("PUT", app + "/buckets/" + name + "/objects/" + name, [this](auto& r, auto& m) { return put_object(r, m); });
    add("GET", app + "/buckets/" + name + "/objects", [this](auto&, auto& m) { return list_objects(m); });
    add("DELETE", app + "/buckets/" + name + "/objects/" + name, [this](auto&, auto& m) { return delete_object(m); });
    add("POST", app + "/placement", [this](auto& r, auto& m) { return place_data(r, m); });

    add("POST", "/system/experiments/latency", [this](auto& r, auto&) { return latency(r); });
    add("POST", "/system/experiments/sweep", [this](auto& r, auto&) { return sweep(r); });
    add("POST", "/system/experiments/video", [this](auto& r, auto&) { return video(r); });
    add("POST", "/system/experiments/fl", [this](auto& r, auto&) { return federated(r); });
}

void Gateway::add(std::string method, std::string pattern, Handler handler)
{
    std::regex regex(pattern);
    routes_.push_back({std::move(method), std::move(pattern), std::move(regex), std::move(handler)});
}

std::vector<std::pair<std::string, std::string>> Gateway::routes() const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& r : routes_) {
        out.emplace_back(r.method, r.pattern);
    }
    return out;
}

GatewayResponse Gateway::handle(const GatewayRequest& request)
{
    bool path_known = false;
    for (const auto& route : routes_) {
        std::smatch m;
        if (!std::regex_match(request.path, m, route.regex)) {
            continue;
        }
        path_known = true;
        if (route.method != request.method) {
            continue;
        }
        try {
            auto response = route.handler(request, m);
            spdlog::debug("{} {} -> {}", request.method, request.path, response.status);
            return response;
        } catch (const Error& e) {
            auto response = error_response(e);
            spdlog::info("{} {} -> {} {}", request.method, request.path, response.status,
                         std::string(edgefaas::to_string(e.code())));
            return response;
        } catch (const json::exception& e) {
            return reply(422, {{"error", "InvalidField"}, {"message", e.what()}, {"resource_ids", json::array()}});
        } catch (const std::exception& e) {
            spdlog::error("{} {} failed: {}", request.method, request.path, scrub(e.what()));
            return reply(500, {{"error", "Internal"}, {"message", scrub(e.what())}, {"resource_ids", json::array()}});
        }
    }
    if (path_known) {
        return reply(405, {{"error", "MethodNotAllowed"}, {"message", request.method + " " + request.path}});
    }
    return reply(404, {{"error", "UnknownRoute"}, {"message", request.path}});
}

// Backend endpoints and credentials never leave the gateway.
std::string Gateway::scrub(std::string text) const
{
    std::vector<std::string> secrets;
    for (const auto& r : platform_.registry().records()) {
        for (const auto* s : {&r.pwd, &r.minio_access_key, &r.minio_secret_key, &r.gateway, &r.prometheus, &r.minio}) {
            if (s->size() >= 3) {
                secrets.push_back(*s);
            }
        }
    }
    // Longest first so a host never shadows a longer host:port.
    std::sort(secrets.begin(), secrets.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& s : secrets) {
        for (auto pos = text.find(s); pos != std::string::npos; pos = text.find(s, pos + kRedacted.size())) {
            text.replace(pos, s.size(), kRedacted);
        }
    }
    return text;
}

GatewayResponse Gateway::error_response(const Error& e) const
{
    return reply(http_status(e.code()), {{"error", std::string(edgefaas::to_string(e.code()))},
                                         {"message", scrub(e.what())},
                                         {"resource_ids", e.resource_ids()}});
}

// --- resources --------------------------------------------------------------

GatewayResponse Gateway::register_resource(const GatewayRequest& r)
{
    std::vector<std::string> warnings;
    auto id = platform_.registry().register_manifest(r.body, &warnings);
    return reply(201, {{"resource_id", id}, {"warnings", warnings}});
}

GatewayResponse Gateway::list_resources(const GatewayRequest&)
{
    json out = json::array();
    for (const auto& rec : platform_.registry().list_resources()) {
        out.push_back(to_json(rec));
    }
    return reply(200, out);
}

GatewayResponse Gateway::get_resource(const std::smatch& m)
{
    return reply(200, to_json(platform_.registry().get(resource_id(m[1])).redacted()));
}

GatewayResponse Gateway::unregister_resource(const std::smatch& m)
{
    auto id = resource_id(m[1]);
    platform_.registry().unregister_resource(id);
    return reply(200, {{"resource_id", id}});
}

// --- applications -----------------------------------------------------------

GatewayResponse Gateway::register_application(const GatewayRequest& r)
{
    auto dag = platform_.catalog().register_application(r.body);
    return reply(201, {{"application", dag.application}, {"dag_id", dag.dag_id}, {"order", topo_order(dag)}});
}

GatewayResponse Gateway::list_applications()
{
    return reply(200, {{"applications", platform_.catalog().applications()}});
}

GatewayResponse Gateway::get_application(const std::smatch& m)
{
    return reply(200, to_json(platform_.catalog().get(m[1])));
}

// --- functions --------------------------------------------------------------

namespace {

FunctionCreation creation_from(const json& body)
{
    FunctionCreation request;
    request.application = field<std::string>(body, "application");
    request.function = field<std::string>(body, "function");
    request.data_object_urls = field_or<std::vector<std::string>>(body, "data_object_urls", {});
    request.data_locations = field_or<std::vector<ResourceId>>(body, "data_locations", {});
    return request;
}

} // namespace

GatewayResponse Gateway::schedule(const GatewayRequest& r)
{
    auto request = creation_from(body_json(r));
    return reply(200, {{"function", qualified_name(request.application, request.function)},
                       {"resources", platform_.functions().schedule(request)}});
}

GatewayResponse Gateway::deploy_function(const GatewayRequest& r)
{
    auto body = body_json(r);
    auto request = creation_from(body);
    DeploymentPackage package;
    if (body.contains("package")) {
        auto bytes = base64_decode(field<std::string>(body, "package"));
        if (!bytes) {
            fail(Errc::BadPackage, "package is not base64");
        }
        package = package_from_archive(*bytes, field_or<std::string>(body, "package_name", "upload.zip"));
    } else if (body.contains("descriptor")) {
        package.location = "inline:" + request.function;
        try {
            package.descriptor = descriptor_from_json(body.at("descriptor"));
        } catch (const json::exception& e) {
            fail(Errc::BadPackage, e.what());
        }
    } else {
        fail(Errc::InvalidField, "deploy needs a package or a descriptor");
    }
    auto ids = platform_.functions().deploy_function(request, package);
    return reply(201, {{"function", qualified_name(request.application, request.function)}, {"resources", ids}});
}

namespace {

json description_json(const ResourceDescription& d, const std::string& route)
{
    json out{{"resource_id", d.resource_id}};
    if (d.description) {
        auto desc = to_json(*d.description);
        desc["url"] = route;
        out["description"] = desc;
    } else {
        out["error"] = d.error;
    }
    return out;
}

} // namespace

GatewayResponse Gateway::list_functions(const GatewayRequest& r)
{
    auto app = r.param("application");
    if (!app) {
        fail(Errc::InvalidField, "list needs ?application=");
    }
    json out = json::array();
    for (const auto& listing : platform_.functions().list_functions(*app)) {
        json resources = json::array();
        for (const auto& d : listing.resources) {
            auto item = description_json(d, "/function/" + qualified_name(*app, listing.function));
            if (item.contains("error")) {
                item["error"] = scrub(item["error"].get<std::string>());
            }
            resources.push_back(item);
        }
        out.push_back({{"function", listing.function}, {"deployed", listing.deployed}, {"resources", resources}});
    }
    return reply(200, out);
}

GatewayResponse Gateway::get_function(const std::smatch& m)
{
    auto [app, fn] = qualified(m[1]);
    json out = json::array();
    for (const auto& d : platform_.functions().get_function(app, fn)) {
        auto item = description_json(d, "/function/" + qualified_name(app, fn));
        if (item.contains("error")) {
            item["error"] = scrub(item["error"].get<std::string>());
        }
        out.push_back(item);
    }
    return reply(200, out);
}

GatewayResponse Gateway::delete_function(const std::smatch& m)
{
    auto [app, fn] = qualified(m[1]);
    platform_.functions().delete_function(app, fn);
    return reply(200, {{"function", qualified_name(app, fn)}});
}

GatewayResponse Gateway::invoke(const GatewayRequest& r, const std::smatch& m, bool sync)
{
    auto [app, fn] = qualified(m[1]);
    bool one = r.flag("invoke_one");
    if (sync) {
        return reply(200, outcome_json(platform_.functions().invoke(app, fn, r.body, one)));
    }
    return reply(202, {{"invocation_id", platform_.functions().invoke_async(app, fn, r.body, one)}});
}

GatewayResponse Gateway::poll(const std::smatch& m)
{
    auto status = platform_.functions().poll(m[1]);
    json out{{"state", to_string(status.state)}};
    if (status.result) {
        out["result"] = outcome_json(*status.result);
    }
    if (status.state == AsyncState::Failed) {
        out["error"] = scrub(status.error);
        out["resource_ids"] = status.failed_resources;
    }
    return reply(200, out);
}

GatewayResponse Gateway::chain(const GatewayRequest& r)
{
    auto body = body_json(r);
    if (!body.contains("envelope")) {
        fail(Errc::InvalidField, "missing field envelope");
    }
    auto envelope = envelope_from_json(body.at("envelope"));
    if (!envelope) {
        fail(Errc::InvalidField, "envelope is malformed");
    }
    auto outcome = platform_.functions().chain_invoke(*envelope, field<std::string>(body, "next"),
                                                      field_or<std::vector<std::string>>(body, "outputs", {}));
    json out{{"fired", outcome.fired}, {"target", outcome.target}, {"waiting_for", outcome.waiting_for}};
    if (outcome.result) {
        out["result"] = outcome_json(*outcome.result);
    }
    return reply(200, out);
}

// --- storage ----------------------------------------------------------------

GatewayResponse Gateway::create_bucket(const GatewayRequest& r, const std::smatch& m)
{
    auto body = body_json(r);
    auto bucket = field<std::string>(body, "bucket");
    auto id = platform_.storage().create_bucket(m[1], bucket, hints_from(field_or<json>(body, "hints", {})));
    return reply(201, {{"bucket", bucket}, {"resource_id", id}});
}

GatewayResponse Gateway::list_buckets(const std::smatch& m)
{
    return reply(200, {{"buckets", platform_.storage().list_buckets(m[1])}});
}

GatewayResponse Gateway::delete_bucket(const std::smatch& m)
{
    platform_.storage().delete_bucket(m[1], m[2]);
    return reply(200, {{"bucket", m[2].str()}});
}

GatewayResponse Gateway::put_object(const GatewayRequest& r, const std::smatch& m)
{
    auto url = platform_.storage().put_bytes(m[1], m[2], m[3], r.body);
    return reply(201, {{"url", url}});
}

GatewayResponse Gateway::list_objects(const std::smatch& m)
{
    return reply(200, {{"objects", platform_.storage().list_objects(m[1], m[2])}});
}

GatewayResponse Gateway::delete_object(const std::smatch& m)
{
    platform_.storage().delete_object(m[3], m[1], m[2]);
    return reply(200, {{"object", m[3].str()}});
}

GatewayResponse Gateway::get_object(const std::smatch& m)
{
    auto url = m[1].str() + "/" + m[2].str() + "/" + m[3].str() + "/" + m[4].str();
    return {200, platform_.storage().get_bytes(url), "application/octet-stream"};
}

GatewayResponse Gateway::place_data(const GatewayRequest& r, const std::smatch& m)
{
    auto body = body_json(r);
    auto id = platform_.storage().place_data(m[1], field<std::string>(body, "bucket"),
                                             hints_from(field_or<json>(body, "hints", {})));
    return reply(200, {{"resource_id", id}});
}

// --- experiments ------------------------------------------------------------

FabricTopology Gateway::experiment_fabric(const json& body) const
{
    if (body.contains("fabric")) {
        return FabricTopology::parse(field<std::string>(body, "fabric"));
    }
    if (!fabric_) {
        fail(Errc::InvalidField, "no fabric configured; send one in the request");
    }
    return *fabric_;
}

LatencyProfile Gateway::experiment_profile(const json& body) const
{
    if (body.contains("profile")) {
        return LatencyProfile::parse(field<std::string>(body, "profile"));
    }
    if (!profile_) {
        fail(Errc::InvalidField, "no latency profile configured; send one in the request");
    }
    return *profile_;
}

GatewayResponse Gateway::latency(const GatewayRequest& r)
{
    auto body = body_json(r);
    auto profile = experiment_profile(body);
    return reply(200, to_json(end_to_end_latency(profile, field<std::string>(body, "partition"))));
}

GatewayResponse Gateway::sweep(const GatewayRequest& r)
{
    auto body = body_json(r);
    auto report = sweep_partitions(experiment_profile(body));
    auto format_name = field_or<std::string>(body, "format", "json");
    if (format_name == "json") {
        return reply(200, to_json(report));
    }
    auto format = report_format_from_name(format_name);
    if (!format) {
        fail(Errc::InvalidField, "format must be json, csv, table or svg");
    }
    static const std::map<ReportFormat, std::string> types{
      {ReportFormat::Csv, "text/csv"}, {ReportFormat::Table, "text/plain"}, {ReportFormat::Svg, "image/svg+xml"}};
    return {200, render_report(report, *format), types.at(*format)};
}

GatewayResponse Gateway::video(const GatewayRequest& r)
{
    auto body = body_json(r);
    Scratch scratch(experiment_fabric(body), platform_.config());
    auto run = run_video_pipeline(*scratch.platform, *scratch.fabric, experiment_profile(body),
                                  field_or<std::vector<FabricNodeId>>(body, "cameras", {}));
    json tiers = json::array();
    for (auto t : run.tiers) {
        tiers.push_back(std::string(to_string(t)));
    }
    return reply(200, {{"placements", node_placements_json(run.node_placements)},
                       {"resource_placements", placements_json(run.placements)},
                       {"tiers", tiers},
                       {"implied_partition", run.implied_partition},
                       {"total", run.total},
                       {"stage_invocations", run.stage_invocations},
                       {"trace", to_json(run.trace)}});
}

GatewayResponse Gateway::federated(const GatewayRequest& r)
{
    auto body = body_json(r);
    auto rounds = field_or<std::size_t>(body, "rounds", 1);
    auto dim = field_or<std::size_t>(body, "dim", 8);
    if (rounds == 0 || dim == 0 || rounds > 1000 || dim > 100000) {
        fail(Errc::InvalidField, "rounds must be 1..1000 and dim 1..100000");
    }
    Scratch scratch(experiment_fabric(body), platform_.config());
    auto run = run_federated_learning(*scratch.platform, *scratch.fabric, rounds, dim,
                                      field_or<std::uint64_t>(body, "seed", 7));
    return reply(200, {{"weights", run.weights},
                       {"contributors", run.contributors},
                       {"placements", node_placements_json(run.node_placements)},
                       {"resource_placements", placements_json(run.placements)},
                       {"first_level_firings", run.first_level_firings},
                       {"second_level_firings", run.second_level_firings},
                       {"trace", to_json(run.trace)}});
}

// --- socket layer -----------------------------------------------------------

void Gateway::mount(httplib::Server& server)
{
    auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
        GatewayRequest request;
        request.method = req.method;
        request.path = req.path;
        for (const auto& [k, v] : req.params) {
            request.query.emplace(k, v);
        }
        request.body = req.body;
        request.content_type = req.get_header_value("Content-Type");
        auto response = handle(request);
        res.status = response.status;
        res.set_content(response.body, response.content_type);
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Put(".*", bridge);
    server.Delete(".*", bridge);
}

bool serve(Gateway& gateway, httplib::Server& server, const std::string& host, int port)
{
    gateway.mount(server);
    spdlog::info("gateway listening on {}:{}", host, port);
    return server.listen(host, port);
}

} // namespace edgefaas
