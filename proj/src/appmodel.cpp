#include "edgefaas/appmodel.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <functional>
#include <charconv>
#include <set>

namespace edgefaas {

namespace {

std::vector<std::string> string_list(const YAML::Node& node, std::string_view what)
{
    std::vector<std::string> out;
    if (!node || node.IsNull()) {
        return out;
    }
    if (node.IsScalar()) {
        auto value = std::string(trim(node.as<std::string>()));
        if (!value.empty()) {
            out.push_back(value);
        }
        return out;
    }
    if (node.IsSequence()) {
        for (const auto& item : node) {
            if (!item.IsScalar()) {
                fail(Errc::InvalidField, std::string(what) + " entries must be names");
            }
            out.push_back(std::string(trim(item.as<std::string>())));
        }
        return out;
    }
    fail(Errc::InvalidField, std::string(what) + " must be a name or a list of names");
}

std::string required_scalar(const YAML::Node& parent, std::string_view key, std::string_view where)
{
    auto node = parent[std::string(key)];
    if (!node || !node.IsScalar()) {
        fail(Errc::InvalidField, std::string(where) + ": missing '" + std::string(key) + "'");
    }
    return std::string(trim(node.as<std::string>()));
}

std::uint32_t parse_count(const std::string& text, std::string_view what)
{
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(Errc::InvalidField, std::string(what) + " is not a non-negative integer: " + text);
    }
    return value;
}

AffinityType parse_affinity_type(const std::string& text, const std::string& fn)
{
    if (iequals(text, "data")) {
        return AffinityType::Data;
    }
    if (iequals(text, "function")) {
        return AffinityType::Function;
    }
    fail(Errc::InvalidField, fn + ": affinitytype must be data or function, got " + text);
}

FunctionSpec parse_function(const YAML::Node& item)
{
    if (!item.IsMap()) {
        fail(Errc::InvalidField, "dag entries must be mappings");
    }
    FunctionSpec fn;
    fn.name = required_scalar(item, "name", "dag entry");
    if (!valid_function_name(fn.name)) {
        fail(Errc::InvalidField, "invalid function name '" + fn.name + "'");
    }
    fn.dependencies = string_list(item["dependencies"], fn.name + ": dependencies");
    std::sort(fn.dependencies.begin(), fn.dependencies.end());
    fn.dependencies.erase(std::unique(fn.dependencies.begin(), fn.dependencies.end()),
                          fn.dependencies.end());

    if (auto req = item["requirements"]; req && !req.IsNull()) {
        if (!req.IsMap()) {
            fail(Errc::InvalidField, fn.name + ": requirements must be a mapping");
        }
        if (auto memory = req["memory"]; memory && !memory.IsNull()) {
            auto bytes = parse_capacity(memory.as<std::string>());
            if (!bytes) {
                fail(Errc::InvalidField, fn.name + ": bad memory requirement " + memory.as<std::string>());
            }
            fn.memory_req = *bytes;
        }
        if (auto gpu = req["gpu"]; gpu && !gpu.IsNull()) {
            fn.gpu_req = parse_count(std::string(trim(gpu.as<std::string>())), fn.name + ": gpu");
        }
        if (auto privacy = req["privacy"]; privacy && !privacy.IsNull()) {
            auto text = std::string(trim(privacy.as<std::string>()));
            if (text != "0" && text != "1") {
                fail(Errc::InvalidField, fn.name + ": privacy must be 0 or 1");
            }
            fn.privacy = text == "1";
        }
    }

    auto affinity = item["affinity"];
    if (!affinity || !affinity.IsMap()) {
        fail(Errc::InvalidField, fn.name + ": missing affinity");
    }
    auto nodetype = required_scalar(affinity, "nodetype", fn.name + ": affinity");
    auto tier = tier_from_name(nodetype);
    if (!tier) {
        fail(Errc::InvalidField, fn.name + ": nodetype must be iot, edge or cloud, got " + nodetype);
    }
    fn.nodetype = *tier;

    std::optional<AffinityType> by_type;
    std::optional<AffinityType> by_location;
    if (auto node = affinity["affinitytype"]; node && node.IsScalar()) {
        by_type = parse_affinity_type(std::string(trim(node.as<std::string>())), fn.name);
    }
    if (auto node = affinity["nodelocation"]; node && node.IsScalar()) {
        by_location = parse_affinity_type(std::string(trim(node.as<std::string>())), fn.name);
    }
    if (by_type && by_location && *by_type != *by_location) {
        fail(Errc::InvalidField, fn.name + ": affinitytype and nodelocation disagree");
    }
    if (!by_type && !by_location) {
        fail(Errc::InvalidField, fn.name + ": missing affinitytype");
    }
    fn.affinity = by_type ? *by_type : *by_location;

    if (auto reduce = affinity["reduce"]; reduce && !reduce.IsNull()) {
        auto text = std::string(trim(reduce.as<std::string>()));
        if (text == "1") {
            fn.reduce = Reduce::One;
        } else if (iequals(text, "auto")) {
            fn.reduce = Reduce::Auto;
        } else {
            fail(Errc::InvalidField, fn.name + ": reduce must be 1 or auto, got " + text);
        }
    }

    if (fn.privacy && fn.nodetype != Tier::Iot) {
        fail(Errc::InvalidField, fn.name + ": privacy=1 requires nodetype iot");
    }
    return fn;
}

void check_acyclic(const ApplicationDag& dag)
{
    // 0 = unvisited, 1 = on stack, 2 = done
    std::map<std::string, int> state;
    std::function<void(const std::string&)> visit = [&](const std::string& name) {
        state[name] = 1;
        for (const auto& dep : dag.nodes.at(name).dependencies) {
            if (state[dep] == 1) {
                fail(Errc::CycleDetected, "dependency cycle through " + name + " and " + dep);
            }
            if (state[dep] == 0) {
                visit(dep);
            }
        }
        state[name] = 2;
    };
    for (const auto& [name, fn] : dag.nodes) {
        if (state[name] == 0) {
            visit(name);
        }
    }
}

} // namespace

std::string_view to_string(AffinityType type) noexcept
{
    return type == AffinityType::Data ? "data" : "function";
}

std::string_view to_string(Reduce reduce) noexcept
{
    return reduce == Reduce::One ? "1" : "auto";
}

const FunctionSpec& ApplicationDag::function(const std::string& name) const
{
    auto it = nodes.find(name);
    if (it == nodes.end()) {
        fail(Errc::UnknownFunction, application + "." + name);
    }
    return it->second;
}

std::vector<std::string> ApplicationDag::successors(const std::string& name) const
{
    std::vector<std::string> out;
    for (const auto& [from, to] : edges) {
        if (from == name) {
            out.push_back(to);
        }
    }
    return out;
}

bool valid_application_name(std::string_view name) noexcept
{
    if (name.empty()) {
        return false;
    }
    auto alnum = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    };
    if (!alnum(name.front()) || !alnum(name.back())) {
        return false;
    }
    return std::all_of(name.begin(), name.end(), [&](char c) { return alnum(c) || c == '.'; });
}

bool valid_function_name(std::string_view name) noexcept
{
    return !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

ApplicationDag parse_application(std::string_view document)
{
    YAML::Node root;
    try {
        root = YAML::Load(std::string(document));
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidField, std::string("not a YAML document: ") + e.what());
    }
    if (!root.IsMap()) {
        fail(Errc::InvalidField, "application manifest must be a mapping");
    }

    ApplicationDag dag;
    dag.application = required_scalar(root, "application", "manifest");
    if (!valid_application_name(dag.application)) {
        fail(Errc::InvalidField, "invalid application name '" + dag.application + "'");
    }
    dag.entrypoints = string_list(root["entrypoint"], "entrypoint");
    if (dag.entrypoints.empty()) {
        fail(Errc::BadEntrypoint, "at least one entrypoint is required");
    }

    auto items = root["dag"];
    if (!items || !items.IsSequence() || items.size() == 0) {
        fail(Errc::InvalidField, "dag must be a non-empty list of functions");
    }
    for (const auto& item : items) {
        auto fn = parse_function(item);
        auto name = fn.name;
        if (!dag.nodes.emplace(name, std::move(fn)).second) {
            fail(Errc::InvalidField, "duplicate function name '" + name + "'");
        }
    }

    for (const auto& [name, fn] : dag.nodes) {
        for (const auto& dep : fn.dependencies) {
            if (!dag.contains(dep)) {
                fail(Errc::UnknownDependency, name + " depends on unknown function " + dep);
            }
            dag.edges.emplace_back(dep, name);
        }
    }
    std::sort(dag.edges.begin(), dag.edges.end());
    check_acyclic(dag);

    for (const auto& entry : dag.entrypoints) {
        auto it = dag.nodes.find(entry);
        if (it == dag.nodes.end()) {
            fail(Errc::BadEntrypoint, "entrypoint " + entry + " is not a function of the application");
        }
        if (!it->second.dependencies.empty()) {
            fail(Errc::BadEntrypoint, "entrypoint " + entry + " has dependencies");
        }
    }
    for (const auto& [name, fn] : dag.nodes) {
        if (fn.affinity == AffinityType::Function && fn.dependencies.empty()) {
            fail(Errc::InvalidField, name + ": affinitytype function needs at least one dependency");
        }
    }
    return dag;
}

std::string to_yaml(const ApplicationDag& dag)
{
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "application" << YAML::Value << dag.application;
    out << YAML::Key << "entrypoint" << YAML::Value << YAML::Flow << dag.entrypoints;
    out << YAML::Key << "dag" << YAML::Value << YAML::BeginSeq;
    for (const auto& name : topo_order(dag)) {
        const auto& fn = dag.nodes.at(name);
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << fn.name;
        out << YAML::Key << "dependencies" << YAML::Value << YAML::Flow << fn.dependencies;
        out << YAML::Key << "requirements" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "memory" << YAML::Value << format_capacity(fn.memory_req);
        out << YAML::Key << "gpu" << YAML::Value << fn.gpu_req;
        out << YAML::Key << "privacy" << YAML::Value << (fn.privacy ? 1 : 0);
        out << YAML::EndMap;
        out << YAML::Key << "affinity" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "nodetype" << YAML::Value << std::string(to_string(fn.nodetype));
        out << YAML::Key << "affinitytype" << YAML::Value << std::string(to_string(fn.affinity));
        out << YAML::Key << "reduce" << YAML::Value << std::string(to_string(fn.reduce));
        out << YAML::EndMap;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return out.c_str();
}

json to_json(const ApplicationDag& dag)
{
    json nodes = json::array();
    for (const auto& [name, fn] : dag.nodes) {
        nodes.push_back({
          {"name", fn.name},
          {"dependencies", fn.dependencies},
          {"memory", fn.memory_req},
          {"gpu", fn.gpu_req},
          {"privacy", fn.privacy ? 1 : 0},
          {"nodetype", to_string(fn.nodetype)},
          {"affinitytype", to_string(fn.affinity)},
          {"reduce", to_string(fn.reduce)},
        });
    }
    json edges = json::array();
    for (const auto& [from, to] : dag.edges) {
        edges.push_back({from, to});
    }
    return json{
      {"application", dag.application},
      {"dag_id", dag.dag_id},
      {"entrypoints", dag.entrypoints},
      {"nodes", nodes},
      {"edges", edges},
    };
}

ApplicationDag dag_from_json(const json& value)
{
    ApplicationDag dag;
    dag.application = value.at("application").get<std::string>();
    dag.dag_id = value.at("dag_id").get<std::string>();
    dag.entrypoints = value.at("entrypoints").get<std::vector<std::string>>();
    for (const auto& n : value.at("nodes")) {
        FunctionSpec fn;
        fn.name = n.at("name").get<std::string>();
        fn.dependencies = n.at("dependencies").get<std::vector<std::string>>();
        fn.memory_req = n.at("memory").get<std::uint64_t>();
        fn.gpu_req = n.at("gpu").get<std::uint32_t>();
        fn.privacy = n.at("privacy").get<int>() == 1;
        fn.nodetype = tier_from_name(n.at("nodetype").get<std::string>()).value_or(Tier::Iot);
        fn.affinity =
          n.at("affinitytype").get<std::string>() == "data" ? AffinityType::Data : AffinityType::Function;
        fn.reduce = n.at("reduce").get<std::string>() == "1" ? Reduce::One : Reduce::Auto;
        dag.nodes.emplace(fn.name, std::move(fn));
    }
    for (const auto& e : value.at("edges")) {
        dag.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    return dag;
}

std::vector<std::string> topo_order(const ApplicationDag& dag)
{
    std::map<std::string, std::size_t> pending;
    for (const auto& [name, fn] : dag.nodes) {
        pending[name] = fn.dependencies.size();
    }
    std::set<std::string> ready;
    for (const auto& [name, count] : pending) {
        if (count == 0) {
            ready.insert(name);
        }
    }
    std::vector<std::string> order;
    order.reserve(dag.nodes.size());
    while (!ready.empty()) {
        auto name = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(name);
        for (const auto& next : dag.successors(name)) {
            if (--pending[next] == 0) {
                ready.insert(next);
            }
        }
    }
    return order;
}

AppCatalog::AppCatalog(MappingStore& store)
  : store_(store)
{
}

ApplicationDag AppCatalog::register_application(std::string_view document)
{
    return register_application(parse_application(document));
}

ApplicationDag AppCatalog::register_application(ApplicationDag dag)
{
    std::lock_guard lock(mutex_);
    store_.update(maps::kDagStore, [&](MapContents& contents) {
        std::uint64_t next = 1;
        for (const auto& [id, value] : contents) {
            if (value.at("application").get<std::string>() == dag.application) {
                fail(Errc::DuplicateApplication, "application " + dag.application + " already exists");
            }
            std::uint64_t n = std::stoull(id.substr(id.find('-') + 1));
            next = std::max(next, n + 1);
        }
        dag.dag_id = "dag-" + std::to_string(next);
        contents[dag.dag_id] = to_json(dag);
    });
    return dag;
}

std::optional<ApplicationDag> AppCatalog::find(const std::string& application) const
{
    for (const auto& [id, value] : store_.entries(maps::kDagStore)) {
        if (value.at("application").get<std::string>() == application) {
            return dag_from_json(value);
        }
    }
    return std::nullopt;
}

ApplicationDag AppCatalog::get(const std::string& application) const
{
    auto dag = find(application);
    if (!dag) {
        fail(Errc::UnknownApplication, "no application " + application);
    }
    return *dag;
}

std::vector<std::string> AppCatalog::applications() const
{
    std::vector<std::string> out;
    for (const auto& [id, value] : store_.entries(maps::kDagStore)) {
        out.push_back(value.at("application").get<std::string>());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace edgefaas
