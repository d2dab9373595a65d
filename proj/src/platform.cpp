#include "edgefaas/platform.hpp"

#include "edgefaas/http_backends.hpp"

#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

namespace edgefaas {

GatewayConfig GatewayConfig::parse(std::string_view yaml)
{
    GatewayConfig c;
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidField, std::string("config is not YAML: ") + e.what());
    }
    if (root.IsNull()) {
        return c;
    }
    if (!root.IsMap()) {
        fail(Errc::InvalidField, "config must be a mapping");
    }
    try {
        for (const auto& entry : root) {
            auto key = entry.first.as<std::string>();
            const auto& v = entry.second;
            if (key == "listen") {
                auto endpoint = parse_endpoint(v.as<std::string>());
                if (!endpoint) {
                    fail(Errc::InvalidField, "listen must be host:port");
                }
                c.listen_host = endpoint->host;
                c.port = endpoint->port;
            } else if (key == "store_backend") {
                c.store_backend = v.as<std::string>();
            } else if (key == "store_path") {
                c.store_path = v.as<std::string>();
            } else if (key == "backend") {
                c.backend = v.as<std::string>();
            } else if (key == "fabric") {
                c.fabric_path = v.as<std::string>();
            } else if (key == "register_fabric") {
                c.register_fabric = v.as<bool>();
            } else if (key == "profile") {
                c.profile_path = v.as<std::string>();
            } else if (key == "policy") {
                c.policy = v.as<std::string>();
            } else if (key == "staleness_bound") {
                c.staleness_bound = v.as<double>();
            } else if (key == "async_ttl") {
                c.async_ttl = v.as<double>();
            } else if (key == "barrier_timeout") {
                c.barrier_timeout = v.as<double>();
            } else if (key == "large_data_threshold") {
                auto bytes = parse_capacity(v.as<std::string>());
                if (!bytes) {
                    fail(Errc::InvalidField, "bad large_data_threshold");
                }
                c.large_data_threshold = *bytes;
            } else if (key == "rtt_ms") {
                for (const auto& link : v) {
                    c.rtt_ms.emplace_back(link[0].as<ResourceId>(), link[1].as<ResourceId>(),
                                          link[2].as<double>());
                }
            } else {
                spdlog::warn("ignoring unknown config key {}", key);
            }
        }
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidField, std::string("malformed config value: ") + e.what());
    }
    c.validate();
    return c;
}

GatewayConfig GatewayConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(Errc::IoFailure, "cannot read config " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void GatewayConfig::validate() const
{
    if (!(staleness_bound > 0) || !(async_ttl > 0) || !(barrier_timeout > 0)) {
        fail(Errc::InvalidField, "durations must be positive");
    }
    if (store_backend != "file" && store_backend != "memory" && store_backend != "http") {
        fail(Errc::InvalidField, "store_backend must be file, memory or http");
    }
    if (backend != "sim" && backend != "http") {
        fail(Errc::InvalidField, "backend must be sim or http");
    }
    if (backend == "sim" && fabric_path.empty()) {
        fail(Errc::InvalidField, "the sim backend needs a fabric file");
    }
}

Backends simulated_backends(std::shared_ptr<SimFabric> fabric, std::shared_ptr<KvBackend> kv,
                            std::shared_ptr<MetricsProvider> metrics)
{
    Backends b;
    b.kv = std::move(kv);
    b.faas = fabric;
    b.objects = fabric;
    b.metrics = metrics ? std::move(metrics) : std::make_shared<SimulatedMetricsProvider>();
    b.rtt = [fabric](const std::vector<ResourceRecord>& records) { return fabric->topology().rtt_for(records); };
    return b;
}

Platform::Platform(GatewayConfig config, Backends backends, MonotonicClock clock, PolicyRegistry policies)
  : config_(std::move(config))
  , backends_(std::move(backends))
{
    store_ = std::make_unique<MappingStore>(backends_.kv);
    registry_ = std::make_unique<Registry>(*store_);
    catalog_ = std::make_unique<AppCatalog>(*store_);
    storage_ = std::make_unique<StorageService>(*store_, *registry_, *backends_.objects,
                                                config_.large_data_threshold);
    FunctionsConfig fc;
    fc.policy = config_.policy;
    fc.staleness_bound = config_.staleness_bound;
    fc.async_ttl = config_.async_ttl;
    fc.barrier_timeout = config_.barrier_timeout;
    functions_ = std::make_unique<FunctionService>(*store_, *registry_, *catalog_, *backends_.faas,
                                                   *backends_.metrics, backends_.rtt, std::move(policies),
                                                   fc, std::move(clock));
    if (auto sim = std::dynamic_pointer_cast<SimFabric>(backends_.faas)) {
        sim->set_object_resolver([this](const std::string& url) { return storage_->get_bytes(url); });
    }
    if (store_->corrupt()) {
        spdlog::error("mapping store is corrupt; writes will be refused");
    }
}

Platform::~Platform()
{
    functions_.reset();  // waits for async invocations
    if (auto sim = std::dynamic_pointer_cast<SimFabric>(backends_.faas)) {
        sim->set_object_resolver(nullptr);
    }
}

std::map<FabricNodeId, ResourceId> fabric_ids(Registry& registry, const FabricTopology& topology)
{
    std::map<FabricNodeId, ResourceId> out;
    for (const auto& record : registry.records()) {
        if (auto node = topology.node_of(record)) {
            out[*node] = record.resource_id;
        }
    }
    return out;
}

std::map<FabricNodeId, ResourceId> register_fabric(Registry& registry, const FabricTopology& topology)
{
    auto known = fabric_ids(registry, topology);
    for (const auto& node : topology.nodes()) {
        if (known.count(node.id) == 0) {
            known[node.id] = registry.register_resource(topology.manifest_for(node.id));
        }
    }
    return known;
}

PlatformBundle build_platform(const GatewayConfig& config)
{
    config.validate();
    PlatformBundle bundle;
    std::shared_ptr<KvBackend> kv;
    if (config.store_backend == "memory") {
        kv = std::make_shared<MemoryKvBackend>();
    } else if (config.store_backend == "file") {
        kv = std::make_shared<FileKvBackend>(config.store_path);
    } else {
        auto endpoint = parse_endpoint(config.store_path);
        if (!endpoint) {
            fail(Errc::InvalidField, "http store_path must be host:port");
        }
        kv = std::make_shared<HttpKvBackend>(*endpoint);
    }

    if (config.backend == "sim") {
        bundle.fabric = std::make_shared<SimFabric>(FabricTopology::load(config.fabric_path));
        bundle.backends = simulated_backends(bundle.fabric, kv);
    } else {
        bundle.backends.kv = kv;
        bundle.backends.faas = std::make_shared<OpenFaasProvider>();
        bundle.backends.objects = std::make_shared<S3ObjectStore>();
        bundle.backends.metrics =
          std::make_shared<PrometheusMetricsProvider>(PrometheusMetricsProvider::Queries{});
        auto links = config.rtt_ms;
        bundle.backends.rtt = [links](const std::vector<ResourceRecord>&) {
            RttMatrix m;
            for (const auto& [a, b, ms] : links) {
                m.set(a, b, ms);
            }
            return m;
        };
    }
    bundle.platform = std::make_unique<Platform>(config, bundle.backends);
    if (bundle.fabric && config.register_fabric) {
        register_fabric(bundle.platform->registry(), bundle.fabric->topology());
    }
    return bundle;
}

} // namespace edgefaas
