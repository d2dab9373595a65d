#pragma once

#include "edgefaas/event_sim.hpp"
#include "edgefaas/platform.hpp"
#include "edgefaas/sim_fabric.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edgefaas {

struct StageProfile {
    std::string name;
    std::uint64_t output_size = 0;     // bytes
    std::map<Tier, double> compute;    // seconds per tier
    double upload_to_edge = 0.0;       // seconds to move this stage's output to the edge tier
    double upload_to_cloud = 0.0;

    friend bool operator==(const StageProfile&, const StageProfile&) = default;
};

// Pipeline stages in execution order. The first stage always runs on iot.
struct LatencyProfile {
    std::vector<StageProfile> stages;

    // Throws Error(InvalidField) on negative entries or duplicate names.
    void validate() const;
    static LatencyProfile parse(std::string_view yaml);
    static LatencyProfile load(const std::filesystem::path& path);
    std::string to_yaml() const;

    std::size_t index_of(std::string_view stage) const;  // Error(UnknownStage)

    friend bool operator==(const LatencyProfile&, const LatencyProfile&) = default;
};

// Tiers when partitioning after stage `partition`: stage 0 on iot, stages
// 1..partition on edge, the rest on cloud. partition 0 is cloud-only, the
// last index edge-only.
std::vector<Tier> partition_tiers(std::size_t stage_count, std::size_t partition);

struct StageCost {
    std::string stage;
    Tier tier = Tier::Iot;
    double compute = 0.0;
    double transfer = 0.0;  // moving this stage's output to the next stage's tier

    friend bool operator==(const StageCost&, const StageCost&) = default;
};

struct LatencyBreakdown {
    std::string partition;
    std::vector<StageCost> stages;
    double compute_total = 0.0;
    double transfer_total = 0.0;
    double total = 0.0;

    friend bool operator==(const LatencyBreakdown&, const LatencyBreakdown&) = default;
};

// Closed form: sum of every stage's compute on its tier plus the upload of
// each stage's output to the tier of the stage after it. `partition` names a
// stage, or is "cloud-only" / "edge-only". Throws Error(UnknownStage).
LatencyBreakdown end_to_end_latency(const LatencyProfile& profile, std::string_view partition);
LatencyBreakdown latency_for_tiers(const LatencyProfile& profile, const std::vector<Tier>& tiers,
                                   std::string partition_label = {});

struct PartitionReport {
    std::vector<LatencyBreakdown> rows;
    std::optional<std::size_t> argmin;  // earliest row on ties

    friend bool operator==(const PartitionReport&, const PartitionReport&) = default;
};

PartitionReport sweep_partitions(const LatencyProfile& profile);

// The same pipeline as discrete-event tasks: compute then upload per stage.
std::vector<SimTask> pipeline_tasks(const LatencyProfile& profile, const std::vector<Tier>& tiers,
                                    const std::string& prefix = {});

enum class ReportFormat { Csv, Table, Svg };
std::optional<ReportFormat> report_format_from_name(std::string_view name) noexcept;

std::string report_csv(const PartitionReport& report);
// Inverse of report_csv. Throws Error(InvalidField).
PartitionReport parse_report_csv(std::string_view csv);
std::string report_table(const PartitionReport& report);
std::string report_svg(const PartitionReport& report);
std::string render_report(const PartitionReport& report, ReportFormat format);
// Throws Error(IoFailure).
void emit_report(const PartitionReport& report, ReportFormat format, const std::filesystem::path& path);

// Packages used by the workflow fixtures.
DeploymentPackage synthetic_package(const std::string& handler, Behavior behavior,
                                    std::map<Tier, double> compute = {}, std::uint64_t output_size = 0);

struct VideoRun {
    std::map<std::string, std::vector<ResourceId>> placements;          // resource IDs
    std::map<std::string, std::vector<FabricNodeId>> node_placements;   // fabric node IDs
    std::vector<Tier> tiers;            // realised tier per stage
    std::string implied_partition;      // stage after which work moves to cloud
    Trace trace;                        // one pipeline per camera, run in parallel
    double total = 0.0;                 // trace makespan
    std::size_t stage_invocations = 0;  // dispatches driven through the chain
};

// Registers the fabric and the video pipeline, deploys every stage through
// the scheduler with cameras on `cameras` (default: every iot node), drives
// one frame through the chain and models its latency with `profile`.
VideoRun run_video_pipeline(Platform& platform, SimFabric& fabric, const LatencyProfile& profile,
                            std::vector<FabricNodeId> cameras = {});

struct FederatedRun {
    std::vector<double> weights;        // final aggregate
    double contributors = 0.0;          // worker count behind it
    std::map<std::string, std::vector<ResourceId>> placements;
    std::map<std::string, std::vector<FabricNodeId>> node_placements;
    std::size_t first_level_firings = 0;
    std::size_t second_level_firings = 0;
    Trace trace;                        // last round
};

// Deterministic worker vectors: uniform in [-1, 1) from `seed`.
using WorkerWeights = std::function<std::vector<double>(std::size_t round, FabricNodeId worker)>;
WorkerWeights seeded_worker_weights(std::uint64_t seed, std::size_t dim);

FederatedRun run_federated_learning(Platform& platform, SimFabric& fabric, std::size_t rounds,
                                    std::size_t weight_dim, std::uint64_t seed = 7,
                                    WorkerWeights weights = {});

// Two-level averaging as the workflow performs it: a plain mean per group,
// then the group means weighted by group size.
std::vector<double> hierarchical_average(const std::vector<std::vector<std::vector<double>>>& groups);

// Application manifests of the two workflows.
std::string video_pipeline_manifest();
std::string federated_learning_manifest();

} // namespace edgefaas
