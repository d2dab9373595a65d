#pragma once

#include "edgefaas/platform.hpp"
#include "edgefaas/sim_fabric.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <memory>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path data_path(const std::string& name)
{
    return std::filesystem::path(EDGEFAAS_DATA_DIR) / name;
}

// A valid record whose endpoints are unique per `seq`.
inline edgefaas::ResourceRecord sample_record(const std::string& tier, unsigned seq)
{
    edgefaas::ResourceRecord r;
    r.name = tier;
    r.node = 2;
    r.memory = 8ull << 30;
    r.cpu = 4;
    r.storage = 64ull << 30;
    auto host = "10.0." + std::to_string(seq / 250) + "." + std::to_string(seq % 250 + 1);
    r.gateway = host + ":8080";
    r.prometheus = host + ":9090";
    r.minio = host + ":9000";
    r.pwd = "pw-" + std::to_string(seq) + "-secret";
    r.minio_access_key = "ak-" + std::to_string(seq);
    r.minio_secret_key = "sk-" + std::to_string(seq) + "-secret";
    return r;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// Manually advanced clock shared by everything in a SimEnv.
struct ManualClock {
    std::shared_ptr<double> now = std::make_shared<double>(1000.0);
    edgefaas::MonotonicClock fn() const
    {
        auto p = now;
        return [p] { return *p; };
    }
    void advance(double seconds) { *now += seconds; }
};

// A simulated deployment over an in-memory mapping store.
struct SimEnv {
    ManualClock clock;
    std::shared_ptr<edgefaas::SimFabric> fabric;
    std::shared_ptr<edgefaas::MemoryKvBackend> kv = std::make_shared<edgefaas::MemoryKvBackend>();
    std::shared_ptr<edgefaas::SimulatedMetricsProvider> metrics;
    edgefaas::GatewayConfig config;
    std::unique_ptr<edgefaas::Platform> platform;

    explicit SimEnv(edgefaas::FabricTopology topology, edgefaas::GatewayConfig cfg = {})
      : fabric(std::make_shared<edgefaas::SimFabric>(std::move(topology)))
      , metrics(std::make_shared<edgefaas::SimulatedMetricsProvider>(clock.fn()))
      , config(std::move(cfg))
    {
        config.store_backend = "memory";
        restart();
    }

    static SimEnv from_file(const std::string& name, edgefaas::GatewayConfig cfg = {})
    {
        return SimEnv(edgefaas::FabricTopology::load(data_path(name)), std::move(cfg));
    }

    // Drops the control plane and rebuilds it from the same store.
    void restart()
    {
        platform.reset();
        platform = std::make_unique<edgefaas::Platform>(
          config, edgefaas::simulated_backends(fabric, kv, metrics), clock.fn());
    }

    edgefaas::Platform& operator*() { return *platform; }
    edgefaas::Platform* operator->() { return platform.get(); }
};

} // namespace testing
