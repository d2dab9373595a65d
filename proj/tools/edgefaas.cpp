// Operator CLI: `serve` runs the gateway, every other subcommand is a thin
// client of its REST routes.

#include "edgefaas/gateway.hpp"
#include "edgefaas/util.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

using namespace edgefaas;

namespace {

enum Exit { Ok = 0, Usage = 1, Validation = 2, Backend = 3 };

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot read " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string env_or(const char* name, std::string fallback)
{
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

struct Client {
    std::string gateway;

    // Prints the response and maps its status onto an exit code.
    int call(const std::string& method, const std::string& path, const std::string& body = {},
             const std::string& content_type = "application/json", const std::string& save_to = {}) const
    {
        auto endpoint = parse_endpoint(gateway);
        if (!endpoint) {
            std::cerr << "bad --gateway " << gateway << " (want host:port)\n";
            return Usage;
        }
        httplib::Client cli(endpoint->host, endpoint->port);
        cli.set_read_timeout(600, 0);
        httplib::Result res;
        if (method == "GET") {
            res = cli.Get(path);
        } else if (method == "DELETE") {
            res = cli.Delete(path);
        } else if (method == "PUT") {
            res = cli.Put(path, body, content_type);
        } else {
            res = cli.Post(path, body, content_type);
        }
        if (!res) {
            std::cerr << "gateway " << gateway << " unreachable: " << httplib::to_string(res.error()) << "\n";
            return Backend;
        }
        if (res->status >= 200 && res->status < 300 && !save_to.empty()) {
            std::ofstream out(save_to, std::ios::binary);
            out << res->body;
            if (!out) {
                std::cerr << "cannot write " << save_to << "\n";
                return Validation;
            }
        } else {
            auto parsed = json::parse(res->body, nullptr, false);
            auto& stream = res->status < 300 ? std::cout : std::cerr;
            if (!parsed.is_discarded() && res->get_header_value("Content-Type") == "application/json") {
                stream << parsed.dump(2) << "\n";
            } else {
                stream << res->body;
            }
        }
        if (res->status < 300) {
            return Ok;
        }
        return res->status < 500 ? Validation : Backend;
    }
};

std::string encode(const std::string& segment)
{
    return httplib::detail::encode_url(segment);
}

volatile std::sig_atomic_t g_stop_requested = 0;

int serve(const std::string& config_path, const std::string& listen, const std::string& log_level)
{
    spdlog::set_level(spdlog::level::from_str(log_level));
    auto config = config_path.empty() ? GatewayConfig{} : GatewayConfig::load(config_path);
    if (!listen.empty()) {
        auto endpoint = parse_endpoint(listen);
        if (!endpoint) {
            std::cerr << "bad --listen " << listen << "\n";
            return Usage;
        }
        config.listen_host = endpoint->host;
        config.port = endpoint->port;
    }
    auto bundle = build_platform(config);
    std::optional<FabricTopology> fabric;
    if (bundle.fabric) {
        fabric = bundle.fabric->topology();
    }
    std::optional<LatencyProfile> profile;
    if (!config.profile_path.empty()) {
        profile = LatencyProfile::load(config.profile_path);
    }
    Gateway gateway(*bundle.platform, fabric, profile);
    httplib::Server server;

    // Stop cleanly on SIGINT/SIGTERM.
    std::signal(SIGINT, [](int) { g_stop_requested = 1; });
    std::signal(SIGTERM, [](int) { g_stop_requested = 1; });
    std::thread watcher([&server] {
        while (!g_stop_requested) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
    });
    bool ok = serve(gateway, server, config.listen_host, config.port);
    g_stop_requested = 1;
    watcher.join();
    if (!ok) {
        std::cerr << "cannot listen on " << config.listen_host << ":" << config.port << "\n";
        return Backend;
    }
    return Ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"edgefaas: federated function-as-a-service gateway and client"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    Client client{env_or("EDGEFAAS_GATEWAY", "127.0.0.1:8080")};
    app.add_option("--gateway", client.gateway, "gateway address host:port (env EDGEFAAS_GATEWAY)");
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "gateway log level: trace, debug, info, warn, error");

    int code = Ok;
    auto run = [&](std::function<int()> fn) { return [&code, fn] { code = fn(); }; };

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the gateway");
    std::string config_path = env_or("EDGEFAAS_CONFIG", "");
    std::string listen;
    serve_cmd->add_option("--config", config_path, "gateway config YAML (env EDGEFAAS_CONFIG)");
    serve_cmd->add_option("--listen", listen, "override the listen address host:port");
    serve_cmd->callback(run([&] { return serve(config_path, listen, log_level); }));

    // resource
    auto* resource = app.add_subcommand("resource", "manage registered resources");
    resource->require_subcommand(1);
    std::string manifest, id;
    auto* r_reg = resource->add_subcommand("register", "register a resource manifest");
    r_reg->add_option("manifest", manifest, "YAML manifest")->required();
    r_reg->callback(run([&] { return client.call("POST", "/system/resources", read_file(manifest), "application/yaml"); }));
    auto* r_unreg = resource->add_subcommand("unregister", "unregister a resource");
    r_unreg->add_option("id", id)->required();
    r_unreg->callback(run([&] { return client.call("DELETE", "/system/resources/" + encode(id)); }));
    resource->add_subcommand("list", "list resources")->callback(run([&] { return client.call("GET", "/system/resources"); }));
    auto* r_get = resource->add_subcommand("get", "show one resource");
    r_get->add_option("id", id)->required();
    r_get->callback(run([&] { return client.call("GET", "/system/resources/" + encode(id)); }));

    // app
    auto* appcmd = app.add_subcommand("app", "manage applications");
    appcmd->require_subcommand(1);
    std::string app_name;
    auto* a_reg = appcmd->add_subcommand("register", "register an application manifest");
    a_reg->add_option("manifest", manifest, "YAML manifest")->required();
    a_reg->callback(run([&] { return client.call("POST", "/system/applications", read_file(manifest), "application/yaml"); }));
    appcmd->add_subcommand("list", "list applications")->callback(run([&] { return client.call("GET", "/system/applications"); }));
    auto* a_get = appcmd->add_subcommand("get", "show an application DAG");
    a_get->add_option("name", app_name)->required();
    a_get->callback(run([&] { return client.call("GET", "/system/applications/" + encode(app_name)); }));

    // fn
    auto* fn = app.add_subcommand("fn", "manage and invoke functions");
    fn->require_subcommand(1);
    std::string qualified, package, payload, payload_file, invocation;
    std::vector<ResourceId> data_locations;
    std::vector<std::string> data_urls;
    bool async = false, invoke_one = false;

    auto split = [](const std::string& q) -> std::optional<std::pair<std::string, std::string>> {
        return split_qualified(q);
    };
    auto creation_body = [&] {
        auto parts = split(qualified);
        if (!parts) {
            throw CLI::ValidationError("function", "expected application.function");
        }
        return json{{"application", parts->first},
                    {"function", parts->second},
                    {"data_locations", data_locations},
                    {"data_object_urls", data_urls}};
    };

    auto* f_deploy = fn->add_subcommand("deploy", "deploy a .zip package");
    f_deploy->add_option("function", qualified, "application.function")->required();
    f_deploy->add_option("--package", package, ".zip deployment archive")->required();
    f_deploy->add_option("--data-location", data_locations, "resource ids holding the input data");
    f_deploy->add_option("--data-url", data_urls, "object urls of the input data");
    f_deploy->callback(run([&] {
        auto body = creation_body();
        body["package"] = base64_encode(read_file(package));
        body["package_name"] = file_name_of(package);
        return client.call("POST", "/system/functions", body.dump());
    }));

    auto* f_schedule = fn->add_subcommand("schedule", "show where a function would be placed");
    f_schedule->add_option("function", qualified, "application.function")->required();
    f_schedule->add_option("--data-location", data_locations, "resource ids holding the input data");
    f_schedule->add_option("--data-url", data_urls, "object urls of the input data");
    f_schedule->callback(run([&] { return client.call("POST", "/system/schedule", creation_body().dump()); }));

    auto* f_invoke = fn->add_subcommand("invoke", "invoke a function");
    f_invoke->add_option("function", qualified, "application.function")->required();
    auto* p_opt = f_invoke->add_option("--payload", payload, "payload text");
    f_invoke->add_option("--payload-file", payload_file, "payload file")->excludes(p_opt);
    auto* sync_flag = f_invoke->add_flag("--sync", "wait for the result (default)");
    f_invoke->add_flag("--async", async, "return an invocation id immediately")->excludes(sync_flag);
    f_invoke->add_flag("--invoke-one", invoke_one, "dispatch to the least loaded candidate only");
    f_invoke->callback(run([&] {
        auto body = payload_file.empty() ? payload : read_file(payload_file);
        auto path = std::string(async ? "/async-function/" : "/function/") + encode(qualified);
        if (invoke_one) {
            path += "?invoke_one=1";
        }
        return client.call("POST", path, body, "application/octet-stream");
    }));

    auto* f_status = fn->add_subcommand("status", "poll an asynchronous invocation");
    f_status->add_option("invocation", invocation)->required();
    f_status->callback(run([&] { return client.call("GET", "/system/invocations/" + encode(invocation)); }));

    auto* f_delete = fn->add_subcommand("delete", "delete a function everywhere");
    f_delete->add_option("function", qualified, "application.function")->required();
    f_delete->callback(run([&] { return client.call("DELETE", "/system/functions/" + encode(qualified)); }));

    auto* f_get = fn->add_subcommand("get", "describe a function on each resource");
    f_get->add_option("function", qualified, "application.function")->required();
    f_get->callback(run([&] { return client.call("GET", "/system/functions/" + encode(qualified)); }));

    auto* f_list = fn->add_subcommand("list", "list the functions of an application");
    f_list->add_option("application", app_name)->required();
    f_list->callback(run([&] { return client.call("GET", "/system/functions?application=" + encode(app_name)); }));

    // store
    auto* store = app.add_subcommand("store", "virtual object storage");
    store->require_subcommand(1);
    std::string bucket, object, file, url;
    std::optional<ResourceId> generator, producer, consumer;
    std::optional<std::uint64_t> volume;
    auto bucket_path = [&] { return "/system/storage/" + encode(app_name) + "/buckets"; };

    auto* s_mb = store->add_subcommand("mb", "make a bucket");
    s_mb->add_option("application", app_name)->required();
    s_mb->add_option("bucket", bucket)->required();
    s_mb->add_option("--generator", generator, "resource generating the data");
    s_mb->add_option("--volume", volume, "expected data volume in bytes");
    s_mb->add_option("--producer", producer, "resource of the producing function");
    s_mb->add_option("--consumer", consumer, "resource of the consuming function");
    s_mb->callback(run([&] {
        json hints = json::object();
        if (generator) hints["generator"] = *generator;
        if (volume) hints["expected_volume"] = *volume;
        if (producer) hints["producer"] = *producer;
        if (consumer) hints["consumer"] = *consumer;
        return client.call("POST", bucket_path(), json{{"bucket", bucket}, {"hints", hints}}.dump());
    }));

    auto* s_rb = store->add_subcommand("rb", "remove an empty bucket");
    s_rb->add_option("application", app_name)->required();
    s_rb->add_option("bucket", bucket)->required();
    s_rb->callback(run([&] { return client.call("DELETE", bucket_path() + "/" + encode(bucket)); }));

    auto* s_put = store->add_subcommand("put", "upload a file; prints its url");
    s_put->add_option("file", file)->required();
    s_put->add_option("application", app_name)->required();
    s_put->add_option("bucket", bucket)->required();
    s_put->callback(run([&] {
        return client.call("PUT", bucket_path() + "/" + encode(bucket) + "/objects/" + encode(file_name_of(file)),
                           read_file(file), "application/octet-stream");
    }));

    auto* s_get = store->add_subcommand("get", "download an object url to a file");
    s_get->add_option("url", url, "application/bucket/resource/object")->required();
    s_get->add_option("file", file)->required();
    s_get->callback(run([&] {
        std::string path = "/system/storage/objects";
        for (const auto& part : [&] {
                 std::vector<std::string> parts;
                 std::stringstream ss(url);
                 for (std::string p; std::getline(ss, p, '/');) parts.push_back(p);
                 return parts;
             }()) {
            path += "/" + encode(part);
        }
        return client.call("GET", path, {}, {}, file);
    }));

    auto* s_rm = store->add_subcommand("rm", "delete an object");
    s_rm->add_option("object", object)->required();
    s_rm->add_option("application", app_name)->required();
    s_rm->add_option("bucket", bucket)->required();
    s_rm->callback(run([&] {
        return client.call("DELETE", bucket_path() + "/" + encode(bucket) + "/objects/" + encode(object));
    }));

    auto* s_ls = store->add_subcommand("ls", "list buckets, or the objects of one bucket");
    s_ls->add_option("application", app_name)->required();
    s_ls->add_option("bucket", bucket);
    s_ls->callback(run([&] {
        return bucket.empty() ? client.call("GET", bucket_path())
                              : client.call("GET", bucket_path() + "/" + encode(bucket) + "/objects");
    }));

    // exp
    auto* exp = app.add_subcommand("exp", "run experiments on a scratch simulated platform");
    exp->require_subcommand(1);
    std::string profile_file, fabric_file, format = "json", out_file, partition;
    std::size_t rounds = 1, dim = 8;
    std::uint64_t seed = 7;
    std::vector<FabricNodeId> cameras;
    auto exp_body = [&] {
        json body = json::object();
        if (!profile_file.empty()) body["profile"] = read_file(profile_file);
        if (!fabric_file.empty()) body["fabric"] = read_file(fabric_file);
        return body;
    };
    auto add_inputs = [&](CLI::App* cmd, bool fabric) {
        cmd->add_option("--profile", profile_file, "latency profile YAML (default: the gateway's)");
        if (fabric) {
            cmd->add_option("--fabric", fabric_file, "fabric topology YAML (default: the gateway's)");
        }
        cmd->add_option("--out", out_file, "write the response body to a file");
    };

    auto* e_sweep = exp->add_subcommand("sweep", "end-to-end latency at every partition point");
    add_inputs(e_sweep, false);
    e_sweep->add_option("--format", format, "json, csv, table or svg")
      ->check(CLI::IsMember({"json", "csv", "table", "svg"}));
    e_sweep->callback(run([&] {
        auto body = exp_body();
        body["format"] = format;
        return client.call("POST", "/system/experiments/sweep", body.dump(), "application/json", out_file);
    }));

    auto* e_latency = exp->add_subcommand("latency", "end-to-end latency at one partition point");
    add_inputs(e_latency, false);
    e_latency->add_option("partition", partition, "stage name, cloud-only or edge-only")->required();
    e_latency->callback(run([&] {
        auto body = exp_body();
        body["partition"] = partition;
        return client.call("POST", "/system/experiments/latency", body.dump(), "application/json", out_file);
    }));

    auto* e_video = exp->add_subcommand("video", "deploy and drive the video pipeline");
    add_inputs(e_video, true);
    e_video->add_option("--camera", cameras, "fabric node ids of the cameras (default: every iot node)");
    e_video->callback(run([&] {
        auto body = exp_body();
        if (!cameras.empty()) body["cameras"] = cameras;
        return client.call("POST", "/system/experiments/video", body.dump(), "application/json", out_file);
    }));

    auto* e_fl = exp->add_subcommand("fl", "deploy and drive federated learning");
    add_inputs(e_fl, true);
    e_fl->add_option("--rounds", rounds, "training rounds")->check(CLI::Range(1, 1000));
    e_fl->add_option("--dim", dim, "weight vector length")->check(CLI::Range(1, 100000));
    e_fl->add_option("--seed", seed, "seed of the synthetic worker weights");
    e_fl->callback(run([&] {
        auto body = exp_body();
        body.update({{"rounds", rounds}, {"dim", dim}, {"seed", seed}});
        return client.call("POST", "/system/experiments/fl", body.dump(), "application/json", out_file);
    }));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? Ok : Usage;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return http_status(e.code()) >= 500 ? Backend : Validation;
    }
    return code;
}
