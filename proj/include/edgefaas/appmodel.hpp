#pragma once

#include "edgefaas/mapping_store.hpp"
#include "edgefaas/registry.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace edgefaas {

enum class AffinityType { Data, Function };
enum class Reduce { One, Auto };

std::string_view to_string(AffinityType type) noexcept;
std::string_view to_string(Reduce reduce) noexcept;

struct FunctionSpec {
    std::string name;
    std::vector<std::string> dependencies;
    std::uint64_t memory_req = 0;
    std::uint32_t gpu_req = 0;
    bool privacy = false;  // only runs on the IoT devices holding its input
    Tier nodetype = Tier::Iot;
    AffinityType affinity = AffinityType::Data;
    Reduce reduce = Reduce::Auto;

    friend bool operator==(const FunctionSpec&, const FunctionSpec&) = default;
};

struct ApplicationDag {
    std::string application;
    std::vector<std::string> entrypoints;
    std::map<std::string, FunctionSpec> nodes;
    std::vector<std::pair<std::string, std::string>> edges;  // dependency -> dependent
    std::string dag_id;

    bool contains(const std::string& function) const { return nodes.count(function) != 0; }
    const FunctionSpec& function(const std::string& name) const;
    std::vector<std::string> successors(const std::string& name) const;

    friend bool operator==(const ApplicationDag&, const ApplicationDag&) = default;
};

// [a-z0-9]([a-z0-9.]*[a-z0-9])? so that "<app>-<bucket>" stays S3-legal and
// splits unambiguously.
bool valid_application_name(std::string_view name) noexcept;

// Function names are [A-Za-z0-9_-]+; no dots, so "app.fn" splits on the last dot.
bool valid_function_name(std::string_view name) noexcept;

// Parses and validates an application manifest. dag_id is left empty.
ApplicationDag parse_application(std::string_view document);

std::string to_yaml(const ApplicationDag& dag);
json to_json(const ApplicationDag& dag);
ApplicationDag dag_from_json(const json& value);

// Dependencies before dependents; among ready nodes the lexicographically
// smallest goes first.
std::vector<std::string> topo_order(const ApplicationDag& dag);

// Registered applications, persisted in the dag_store mapping keyed by dag_id.
class AppCatalog {
public:
    explicit AppCatalog(MappingStore& store);

    ApplicationDag register_application(std::string_view document);
    ApplicationDag register_application(ApplicationDag dag);

    std::optional<ApplicationDag> find(const std::string& application) const;
    ApplicationDag get(const std::string& application) const;
    std::vector<std::string> applications() const;

private:
    MappingStore& store_;
    mutable std::mutex mutex_;
};

} // namespace edgefaas
