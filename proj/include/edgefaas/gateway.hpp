#pragma once

#include "edgefaas/harness.hpp"
#include "edgefaas/platform.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace edgefaas {

// HTTP status for an error code: 404 unknown entities, 409 state conflicts,
// 422 validation, 502 backend failures.
int http_status(Errc code) noexcept;

struct GatewayRequest {
    std::string method;
    std::string path;
    std::multimap<std::string, std::string> query;
    std::string body;
    std::string content_type;

    std::optional<std::string> param(const std::string& key) const;
    bool flag(const std::string& key) const;  // 1/true/yes
};

struct GatewayResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";

    json as_json() const;
};

// The REST surface over one Platform. Routing is independent of the socket
// layer so tests can drive handle() directly; mount() wires it into a server.
class Gateway {
public:
    // `fabric` and `profile` back the experiment routes; experiments always run
    // on a fresh in-memory platform built from them.
    Gateway(Platform& platform, std::optional<FabricTopology> fabric = std::nullopt,
            std::optional<LatencyProfile> profile = std::nullopt);

    GatewayResponse handle(const GatewayRequest& request);

    void mount(httplib::Server& server);

    // Method and path pattern of every route, for documentation and tests.
    std::vector<std::pair<std::string, std::string>> routes() const;

private:
    using Handler = std::function<GatewayResponse(const GatewayRequest&, const std::smatch&)>;
    struct Route {
        std::string method;
        std::string pattern;
        std::regex regex;
        Handler handler;
    };

    void add(std::string method, std::string pattern, Handler handler);
    std::string scrub(std::string text) const;
    GatewayResponse error_response(const Error& e) const;

    GatewayResponse register_resource(const GatewayRequest& r);
    GatewayResponse list_resources(const GatewayRequest& r);
    GatewayResponse get_resource(const std::smatch& m);
    GatewayResponse unregister_resource(const std::smatch& m);

    GatewayResponse register_application(const GatewayRequest& r);
    GatewayResponse list_applications();
    GatewayResponse get_application(const std::smatch& m);

    GatewayResponse schedule(const GatewayRequest& r);
    GatewayResponse deploy_function(const GatewayRequest& r);
    GatewayResponse list_functions(const GatewayRequest& r);
    GatewayResponse get_function(const std::smatch& m);
    GatewayResponse delete_function(const std::smatch& m);

    GatewayResponse invoke(const GatewayRequest& r, const std::smatch& m, bool sync);
    GatewayResponse poll(const std::smatch& m);
    GatewayResponse chain(const GatewayRequest& r);

    GatewayResponse create_bucket(const GatewayRequest& r, const std::smatch& m);
    GatewayResponse list_buckets(const std::smatch& m);
    GatewayResponse delete_bucket(const std::smatch& m);
    GatewayResponse put_object(const GatewayRequest& r, const std::smatch& m);
    GatewayResponse list_objects(const std::smatch& m);
    GatewayResponse delete_object(const std::smatch& m);
    GatewayResponse get_object(const std::smatch& m);
    GatewayResponse place_data(const GatewayRequest& r, const std::smatch& m);

    GatewayResponse latency(const GatewayRequest& r);
    GatewayResponse sweep(const GatewayRequest& r);
    GatewayResponse video(const GatewayRequest& r);
    GatewayResponse federated(const GatewayRequest& r);

    FabricTopology experiment_fabric(const json& body) const;
    LatencyProfile experiment_profile(const json& body) const;

    Platform& platform_;
    std::optional<FabricTopology> fabric_;
    std::optional<LatencyProfile> profile_;
    std::vector<Route> routes_;
};

// JSON shapes shared by the gateway and the CLI.
json to_json(const LatencyBreakdown& breakdown);
json to_json(const PartitionReport& report);
json to_json(const Trace& trace);

// Blocks serving `gateway` until stop() is called on `server` from elsewhere.
// Returns false when the address cannot be bound.
bool serve(Gateway& gateway, httplib::Server& server, const std::string& host, int port);

} // namespace edgefaas
