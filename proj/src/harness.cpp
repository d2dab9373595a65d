#include "edgefaas/harness.hpp"

#include "edgefaas/object_url.hpp"
#include "edgefaas/util.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace edgefaas {

namespace {

constexpr std::string_view kVideoApp = "videopipeline";
constexpr std::string_view kFlApp = "federatedlearning";

double compute_on(const StageProfile& stage, Tier tier)
{
    auto it = stage.compute.find(tier);
    if (it == stage.compute.end()) {
        fail(Errc::InvalidField,
             "profile has no " + std::string(to_string(tier)) + " compute time for " + stage.name);
    }
    return it->second;
}

double upload_to(const StageProfile& stage, Tier tier)
{
    switch (tier) {
    case Tier::Edge: return stage.upload_to_edge;
    case Tier::Cloud: return stage.upload_to_cloud;
    case Tier::Iot: break;
    }
    fail(Errc::InvalidField, "uploads towards iot are not modelled (after " + stage.name + ")");
}

std::string fmt_double(double v)
{
    return fmt::format("{:.17g}", v);
}

double parse_double(const std::string& text)
{
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        fail(Errc::InvalidField, "not a number in report: " + text);
    }
}

std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

std::string escape_xml(std::string_view text)
{
    std::string out;
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

// --- profile ----------------------------------------------------------------

void LatencyProfile::validate() const
{
    std::set<std::string> names;
    for (const auto& s : stages) {
        if (s.name.empty() || !names.insert(s.name).second) {
            fail(Errc::InvalidField, "stage names must be unique and non-empty");
        }
        if (!(s.upload_to_edge >= 0) || !(s.upload_to_cloud >= 0)) {
            fail(Errc::InvalidField, "negative upload time for " + s.name);
        }
        for (const auto& [tier, seconds] : s.compute) {
            if (!(seconds >= 0)) {
                fail(Errc::InvalidField, "negative compute time for " + s.name);
            }
        }
    }
}

LatencyProfile LatencyProfile::parse(std::string_view yaml)
{
    LatencyProfile profile;
    try {
        auto root = YAML::Load(std::string(yaml));
        if (!root["stages"] || !root["stages"].IsSequence()) {
            fail(Errc::InvalidField, "profile needs a stages list");
        }
        for (const auto& node : root["stages"]) {
            StageProfile s;
            s.name = node["name"].as<std::string>();
            if (auto size = node["output_size"]) {
                auto bytes = parse_capacity(size.as<std::string>());
                if (!bytes) {
                    fail(Errc::InvalidField, "bad output_size for " + s.name);
                }
                s.output_size = *bytes;
            }
            if (node["compute"]) {
                for (const auto& entry : node["compute"]) {
                    auto tier = tier_from_name(entry.first.as<std::string>());
                    if (!tier) {
                        fail(Errc::InvalidField, "unknown tier in compute of " + s.name);
                    }
                    s.compute[*tier] = entry.second.as<double>();
                }
            }
            s.upload_to_edge = node["upload_to_edge"] ? node["upload_to_edge"].as<double>() : 0.0;
            s.upload_to_cloud = node["upload_to_cloud"] ? node["upload_to_cloud"].as<double>() : 0.0;
            profile.stages.push_back(std::move(s));
        }
    } catch (const YAML::Exception& e) {
        fail(Errc::InvalidField, std::string("malformed profile: ") + e.what());
    }
    profile.validate();
    return profile;
}

LatencyProfile LatencyProfile::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(Errc::IoFailure, "cannot read profile " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

std::string LatencyProfile::to_yaml() const
{
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap << YAML::Key << "stages" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : stages) {
        out << YAML::BeginMap;
        out << YAML::Key << "name" << YAML::Value << s.name;
        out << YAML::Key << "output_size" << YAML::Value << s.output_size;
        out << YAML::Key << "compute" << YAML::Value << YAML::BeginMap;
        for (const auto& [tier, seconds] : s.compute) {
            out << YAML::Key << std::string(to_string(tier)) << YAML::Value << seconds;
        }
        out << YAML::EndMap;
        out << YAML::Key << "upload_to_edge" << YAML::Value << s.upload_to_edge;
        out << YAML::Key << "upload_to_cloud" << YAML::Value << s.upload_to_cloud;
        out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return out.c_str();
}

std::size_t LatencyProfile::index_of(std::string_view stage) const
{
    for (std::size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].name == stage) {
            return i;
        }
    }
    fail(Errc::UnknownStage, "no stage named " + std::string(stage));
}

// --- cost model -------------------------------------------------------------

std::vector<Tier> partition_tiers(std::size_t stage_count, std::size_t partition)
{
    std::vector<Tier> tiers(stage_count, Tier::Cloud);
    for (std::size_t i = 0; i < stage_count; ++i) {
        if (i == 0) {
            tiers[i] = Tier::Iot;
        } else if (i <= partition) {
            tiers[i] = Tier::Edge;
        }
    }
    return tiers;
}

LatencyBreakdown latency_for_tiers(const LatencyProfile& profile, const std::vector<Tier>& tiers,
                                   std::string partition_label)
{
    if (tiers.size() != profile.stages.size()) {
        fail(Errc::InvalidField, "one tier per stage expected");
    }
    LatencyBreakdown b;
    b.partition = std::move(partition_label);
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        const auto& stage = profile.stages[i];
        StageCost cost{stage.name, tiers[i], compute_on(stage, tiers[i]), 0.0};
        if (i + 1 < tiers.size()) {
            cost.transfer = upload_to(stage, tiers[i + 1]);
        }
        b.compute_total += cost.compute;
        b.transfer_total += cost.transfer;
        b.stages.push_back(std::move(cost));
    }
    b.total = b.compute_total + b.transfer_total;
    return b;
}

LatencyBreakdown end_to_end_latency(const LatencyProfile& profile, std::string_view partition)
{
    if (profile.stages.empty()) {
        fail(Errc::UnknownStage, "profile has no stages");
    }
    std::size_t index = 0;
    if (partition == "cloud-only") {
        index = 0;
    } else if (partition == "edge-only") {
        index = profile.stages.size() - 1;
    } else {
        index = profile.index_of(partition);
    }
    return latency_for_tiers(profile, partition_tiers(profile.stages.size(), index),
                             profile.stages[index].name);
}

PartitionReport sweep_partitions(const LatencyProfile& profile)
{
    PartitionReport report;
    for (const auto& stage : profile.stages) {
        report.rows.push_back(end_to_end_latency(profile, stage.name));
        const auto& row = report.rows.back();
        if (!report.argmin || row.total < report.rows[*report.argmin].total) {
            report.argmin = report.rows.size() - 1;
        }
    }
    return report;
}

std::vector<SimTask> pipeline_tasks(const LatencyProfile& profile, const std::vector<Tier>& tiers,
                                    const std::string& prefix)
{
    auto costs = latency_for_tiers(profile, tiers);
    std::vector<SimTask> tasks;
    std::string previous;
    for (std::size_t i = 0; i < costs.stages.size(); ++i) {
        const auto& c = costs.stages[i];
        SimTask compute{prefix + c.stage, std::string(to_string(c.tier)), c.compute, {}, 0.0};
        if (!previous.empty()) {
            compute.deps.push_back(previous);
        }
        tasks.push_back(compute);
        previous = compute.name;
        if (i + 1 < costs.stages.size()) {
            SimTask upload{prefix + c.stage + "->" + costs.stages[i + 1].stage,
                           std::string(to_string(c.tier)) + "->" + std::string(to_string(tiers[i + 1])),
                           c.transfer,
                           {previous},
                           0.0};
            tasks.push_back(upload);
            previous = upload.name;
        }
    }
    return tasks;
}

// --- reports ----------------------------------------------------------------

std::optional<ReportFormat> report_format_from_name(std::string_view name) noexcept
{
    if (name == "csv") {
        return ReportFormat::Csv;
    }
    if (name == "table") {
        return ReportFormat::Table;
    }
    if (name == "svg") {
        return ReportFormat::Svg;
    }
    return std::nullopt;
}

std::string report_csv(const PartitionReport& report)
{
    std::string out = "partition,total,compute_total,transfer_total,argmin,stages\n";
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        std::string stages;
        for (const auto& s : r.stages) {
            if (!stages.empty()) {
                stages += ";";
            }
            stages += s.stage + ":" + std::string(to_string(s.tier)) + ":" + fmt_double(s.compute) + ":" +
                      fmt_double(s.transfer);
        }
        out += fmt::format("{},{},{},{},{},{}\n", r.partition, fmt_double(r.total), fmt_double(r.compute_total),
                           fmt_double(r.transfer_total), report.argmin == i ? 1 : 0, stages);
    }
    return out;
}

PartitionReport parse_report_csv(std::string_view csv)
{
    auto lines = split(csv, '\n');
    if (lines.empty() || lines.front() != "partition,total,compute_total,transfer_total,argmin,stages") {
        fail(Errc::InvalidField, "not a partition report");
    }
    PartitionReport report;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        auto cells = split(lines[i], ',');
        if (cells.size() != 6) {
            fail(Errc::InvalidField, "report row " + std::to_string(i) + " has the wrong width");
        }
        LatencyBreakdown row;
        row.partition = cells[0];
        row.total = parse_double(cells[1]);
        row.compute_total = parse_double(cells[2]);
        row.transfer_total = parse_double(cells[3]);
        if (cells[4] == "1") {
            report.argmin = report.rows.size();
        }
        if (!cells[5].empty()) {
            for (const auto& item : split(cells[5], ';')) {
                auto parts = split(item, ':');
                auto tier = parts.size() == 4 ? tier_from_name(parts[1]) : std::nullopt;
                if (!tier) {
                    fail(Errc::InvalidField, "malformed stage cell " + item);
                }
                row.stages.push_back({parts[0], *tier, parse_double(parts[2]), parse_double(parts[3])});
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string report_table(const PartitionReport& report)
{
    std::string out = fmt::format("{:<20} {:>12} {:>12} {:>12}\n", "partition", "compute_s", "transfer_s", "total_s");
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        out += fmt::format("{:<20} {:>12.3f} {:>12.3f} {:>12.3f}{}\n", r.partition, r.compute_total,
                           r.transfer_total, r.total, report.argmin == i ? "  <- best" : "");
    }
    return out;
}

std::string report_svg(const PartitionReport& report)
{
    constexpr double kWidth = 640, kHeight = 360, kLeft = 60, kBottom = 300, kTop = 20;
    double peak = 0;
    for (const auto& r : report.rows) {
        peak = std::max(peak, r.total);
    }
    if (peak <= 0) {
        peak = 1;
    }
    double slot = report.rows.empty() ? 0 : (kWidth - kLeft - 20) / static_cast<double>(report.rows.size());
    auto scale = [&](double v) { return v / peak * (kBottom - kTop); };

    std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"10\">\n",
      kWidth, kHeight);
    out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kLeft, kBottom,
                       kWidth - 20);
    out += fmt::format("<text x=\"5\" y=\"{}\">{:.1f} s</text>\n", kTop + 10, peak);
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& r = report.rows[i];
        double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
        double w = slot * 0.7;
        double hc = scale(r.compute_total);
        double ht = scale(r.transfer_total);
        out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#4c72b0\"/>\n",
                           x, kBottom - hc, w, hc);
        out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#dd8452\"/>\n",
                           x, kBottom - hc - ht, w, ht);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{:.2f}</text>\n", x, kBottom - hc - ht - 4, r.total);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" transform=\"rotate(30 {:.1f} {})\">{}{}</text>\n", x,
                           kBottom + 14, x, kBottom + 14, escape_xml(r.partition), report.argmin == i ? " *" : "");
    }
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#4c72b0\"/>"
                       "<text x=\"{}\" y=\"{}\">compute</text>\n",
                       kWidth - 150, kTop, kWidth - 135, kTop + 9);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"#dd8452\"/>"
                       "<text x=\"{}\" y=\"{}\">transfer</text>\n",
                       kWidth - 80, kTop, kWidth - 65, kTop + 9);
    out += "</svg>\n";
    return out;
}

std::string render_report(const PartitionReport& report, ReportFormat format)
{
    switch (format) {
    case ReportFormat::Csv: return report_csv(report);
    case ReportFormat::Table: return report_table(report);
    case ReportFormat::Svg: return report_svg(report);
    }
    return report_csv(report);
}

void emit_report(const PartitionReport& report, ReportFormat format, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::trunc);
    out << render_report(report, format);
    out.flush();
    if (!out) {
        fail(Errc::IoFailure, "cannot write report to " + path.string());
    }
}

// --- workflows --------------------------------------------------------------

std::string video_pipeline_manifest()
{
    return R"(application: videopipeline
entrypoint: video-generator
dag:
- name: video-generator
  affinity:
    nodetype: iot
    affinitytype: data
    reduce: auto
- name: video-processing
  dependencies: video-generator
  affinity:
    nodetype: edge
    affinitytype: function
    reduce: auto
- name: motion-detection
  dependencies: video-processing
  affinity:
    nodetype: edge
    affinitytype: function
    reduce: auto
- name: face-detection
  dependencies: motion-detection
  affinity:
    nodetype: cloud
    affinitytype: function
    reduce: auto
- name: face-extraction
  dependencies: face-detection
  affinity:
    nodetype: cloud
    affinitytype: function
    reduce: auto
- name: face-recognition
  dependencies: face-extraction
  affinity:
    nodetype: cloud
    affinitytype: function
    reduce: auto
)";
}

std::string federated_learning_manifest()
{
    return R"(application: federatedlearning
entrypoint: train
dag:
- name: train
  dependencies:
  affinity:
    nodetype: iot
    nodelocation: data
    reduce: auto
- name: firstaggregation
  dependencies: train
  affinity:
    nodetype: edge
    nodelocation: function
    reduce: auto
- name: secondaggregation
  dependencies: firstaggregation
  affinity:
    nodetype: cloud
    nodelocation: function
    reduce: 1
)";
}

DeploymentPackage synthetic_package(const std::string& handler, Behavior behavior, std::map<Tier, double> compute,
                                    std::uint64_t output_size)
{
    DeploymentPackage p;
    p.location = "synthetic:" + handler;
    p.descriptor.handler = handler;
    p.descriptor.image = "edgefaas/synthetic:" + std::string(to_string(behavior));
    p.descriptor.labels = {{"edgefaas.synthetic", std::string(to_string(behavior))}};
    p.descriptor.synthetic.behavior = behavior;
    p.descriptor.synthetic.compute = std::move(compute);
    p.descriptor.synthetic.output_size = output_size;
    return p;
}

namespace {

ApplicationDag ensure_application(Platform& platform, std::string_view name, const std::string& manifest)
{
    if (auto dag = platform.catalog().find(std::string(name))) {
        return *dag;
    }
    return platform.catalog().register_application(manifest);
}

std::map<std::string, std::vector<FabricNodeId>> to_nodes(const std::map<std::string, std::vector<ResourceId>>& p,
                                                          const std::map<FabricNodeId, ResourceId>& ids)
{
    std::map<std::string, std::vector<FabricNodeId>> out;
    for (const auto& [fn, rids] : p) {
        for (auto rid : rids) {
            for (const auto& [node, id] : ids) {
                if (id == rid) {
                    out[fn].push_back(node);
                }
            }
        }
        std::sort(out[fn].begin(), out[fn].end());
    }
    return out;
}

// One bucket per producing resource, placed on that resource.
std::string store_output(Platform& platform, const std::string& app, ResourceId producer, const std::string& name,
                         const std::string& bytes)
{
    auto bucket = "out-" + std::to_string(producer);
    if (!platform.storage().bucket_resource(app, bucket)) {
        PlacementHints hints;
        hints.generator = producer;
        platform.storage().create_bucket(app, bucket, hints);
    }
    return platform.storage().put_bytes(app, bucket, name, bytes);
}

} // namespace

VideoRun run_video_pipeline(Platform& platform, SimFabric& fabric, const LatencyProfile& profile,
                            std::vector<FabricNodeId> cameras)
{
    const auto& topology = fabric.topology();
    auto ids = register_fabric(platform.registry(), topology);
    auto dag = ensure_application(platform, kVideoApp, video_pipeline_manifest());
    auto order = topo_order(dag);
    if (profile.stages.size() != order.size()) {
        fail(Errc::InvalidField, "profile and pipeline disagree on the number of stages");
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (profile.stages[i].name != order[i]) {
            fail(Errc::InvalidField, "profile stage " + profile.stages[i].name + " does not match " + order[i]);
        }
    }
    if (cameras.empty()) {
        cameras = topology.nodes_of_tier(Tier::Iot);
    }
    std::vector<ResourceId> camera_ids;
    for (auto node : cameras) {
        camera_ids.push_back(ids.at(node));
    }

    const std::string app(kVideoApp);
    VideoRun run;
    for (std::size_t i = 0; i < order.size(); ++i) {
        FunctionCreation request{app, order[i], {}, {}};
        if (dag.function(order[i]).affinity == AffinityType::Data) {
            request.data_locations = camera_ids;
        }
        auto package = synthetic_package(order[i] + ".py", Behavior::Delay, profile.stages[i].compute);
        run.placements[order[i]] = platform.functions().deploy_function(request, package);
    }
    run.node_placements = to_nodes(run.placements, ids);

    // Drive one frame per camera through the chain.
    struct Completion {
        InvocationEnvelope envelope;
        std::string output;
    };
    std::deque<Completion> pending;
    auto first = platform.functions().invoke(app, order.front(), "frame-0");
    for (const auto& o : first.outcomes) {
        pending.push_back({{"", o.resource_id, app, order.front(), first.invocation_id, true}, o.output});
        ++run.stage_invocations;
    }
    while (!pending.empty()) {
        auto done = std::move(pending.front());
        pending.pop_front();
        const auto& env = done.envelope;
        auto url = store_output(platform, app, env.resource_id, env.function + "-" + env.invocation_id, done.output);
        for (const auto& next : dag.successors(env.function)) {
            auto chained = platform.functions().chain_invoke(env, next, {url});
            if (!chained.fired) {
                continue;
            }
            for (const auto& o : chained.result->outcomes) {
                pending.push_back({{"", o.resource_id, app, next, chained.result->invocation_id, true}, o.output});
                ++run.stage_invocations;
            }
        }
    }

    for (const auto& stage : order) {
        auto record = platform.registry().get(run.placements.at(stage).front());
        run.tiers.push_back(*record.tier());
    }
    std::size_t edge_until = 0;
    for (std::size_t i = 1; i < run.tiers.size() && run.tiers[i] == Tier::Edge; ++i) {
        edge_until = i;
    }
    run.implied_partition =
      run.tiers == partition_tiers(run.tiers.size(), edge_until) ? order[edge_until] : std::string("custom");

    std::vector<SimTask> tasks;
    for (auto node : cameras) {
        auto chain = pipeline_tasks(profile, run.tiers, "camera-" + std::to_string(node) + "/");
        tasks.insert(tasks.end(), chain.begin(), chain.end());
    }
    run.trace = virtual_clock_run(tasks);
    run.total = run.trace.makespan;
    return run;
}

WorkerWeights seeded_worker_weights(std::uint64_t seed, std::size_t dim)
{
    return [seed, dim](std::size_t round, FabricNodeId worker) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(round), static_cast<std::uint32_t>(worker)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> w(dim);
        for (auto& x : w) {
            x = dist(rng);
        }
        return w;
    };
}

FederatedRun run_federated_learning(Platform& platform, SimFabric& fabric, std::size_t rounds,
                                    std::size_t weight_dim, std::uint64_t seed, WorkerWeights weights)
{
    const auto& topology = fabric.topology();
    auto ids = register_fabric(platform.registry(), topology);
    auto dag = ensure_application(platform, kFlApp, federated_learning_manifest());
    if (!weights) {
        weights = seeded_worker_weights(seed, weight_dim);
    }
    const std::string app(kFlApp);

    std::vector<ResourceId> workers;
    for (auto node : topology.nodes_of_tier(Tier::Iot)) {
        workers.push_back(ids.at(node));
    }
    const std::map<std::string, std::pair<Behavior, std::map<Tier, double>>> bodies{
      {"train", {Behavior::Echo, {{Tier::Iot, 5.0}}}},
      {"firstaggregation", {Behavior::VectorAverage, {{Tier::Edge, 0.05}}}},
      {"secondaggregation", {Behavior::VectorAverage, {{Tier::Cloud, 0.02}}}},
    };

    FederatedRun run;
    for (const auto& fn : topo_order(dag)) {
        FunctionCreation request{app, fn, {}, {}};
        if (dag.function(fn).affinity == AffinityType::Data) {
            request.data_locations = workers;
        }
        const auto& [behavior, compute] = bodies.at(fn);
        run.placements[fn] = platform.functions().deploy_function(request, synthetic_package(fn + ".py", behavior, compute));
    }
    run.node_placements = to_nodes(run.placements, ids);
    auto node_of = [&](ResourceId rid) {
        for (const auto& [node, id] : ids) {
            if (id == rid) {
                return node;
            }
        }
        fail(Errc::UnknownResource, "resource " + std::to_string(rid) + " is not on the fabric");
    };

    for (std::size_t round = 0; round < rounds; ++round) {
        std::vector<SimTask> tasks;
        std::map<FabricNodeId, std::vector<std::string>> arriving;  // per edge node
        std::vector<std::string> models;
        auto trained = platform.functions().invoke(app, "train", json{{"round", round}}.dump());
        for (const auto& o : trained.outcomes) {
            auto node = node_of(o.resource_id);
            auto body = json{{"weights", weights(round, node)}, {"count", 1}}.dump();
            auto url = store_output(platform, app, o.resource_id, fmt::format("train-{}.json", round), body);
            InvocationEnvelope done{"", o.resource_id, app, "train", trained.invocation_id, true};
            auto train_task = fmt::format("train@{}", node);
            tasks.push_back({train_task, "node-" + std::to_string(node), o.latency_seconds, {}, 0.0});

            auto first = platform.functions().chain_invoke(done, "firstaggregation", {url});
            auto edge_node = node_of(first.target);
            auto upload = fmt::format("weights {}->{}", node, edge_node);
            tasks.push_back({upload, "link", topology.transfer_time(body.size(), node, edge_node), {train_task}, 0.0});
            arriving[edge_node].push_back(upload);
            if (!first.fired) {
                continue;
            }
            ++run.first_level_firings;
            const auto& agg = first.result->outcomes.front();
            auto agg_task = fmt::format("firstaggregation@{}", edge_node);
            tasks.push_back({agg_task, "node-" + std::to_string(edge_node), agg.latency_seconds,
                             arriving[edge_node], 0.0});

            auto agg_url = store_output(platform, app, agg.resource_id, fmt::format("firstaggregation-{}.json", round),
                                        agg.output);
            InvocationEnvelope agg_done{"", agg.resource_id, app, "firstaggregation", first.result->invocation_id, true};
            auto second = platform.functions().chain_invoke(agg_done, "secondaggregation", {agg_url});
            auto cloud_node = node_of(second.target);
            models.push_back(fmt::format("model {}->{}", edge_node, cloud_node));
            tasks.push_back({models.back(), "link", topology.transfer_time(agg.output.size(), edge_node, cloud_node),
                             {agg_task}, 0.0});
            if (!second.fired) {
                continue;
            }
            ++run.second_level_firings;
            const auto& final_out = second.result->outcomes.front();
            tasks.push_back({fmt::format("secondaggregation@{}", cloud_node), "node-" + std::to_string(cloud_node),
                             final_out.latency_seconds, models, 0.0});
            store_output(platform, app, final_out.resource_id, fmt::format("model-{}.json", round), final_out.output);
            auto parsed = json::parse(final_out.output);
            run.weights = parsed.at("weights").get<std::vector<double>>();
            run.contributors = parsed.at("count").get<double>();
        }
        run.trace = virtual_clock_run(tasks);
    }
    return run;
}

std::vector<double> hierarchical_average(const std::vector<std::vector<std::vector<double>>>& groups)
{
    std::vector<json> edge_outputs;
    for (const auto& group : groups) {
        if (group.empty()) {
            continue;
        }
        std::vector<json> items;
        for (const auto& w : group) {
            items.push_back(json{{"weights", w}, {"count", 1}});
        }
        edge_outputs.push_back(vector_average(items));
    }
    return vector_average(edge_outputs).at("weights").get<std::vector<double>>();
}

} // namespace edgefaas
