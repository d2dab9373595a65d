#include "edgefaas/harness.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>

using namespace edgefaas;

namespace {

LatencyProfile calibrated() { return LatencyProfile::load(testing::data_path("video_profile.yaml")); }

Errc error_of(const std::function<void()>& body)
{
    try {
        body();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::IoFailure;  // sentinel: no error
}

} // namespace

TEST_CASE("calibrated profile reproduces the latency anchors")
{
    auto p = calibrated();
    REQUIRE(p.stages.size() == 6);
    CHECK(p.stages[0].output_size == 92'000'000);
    CHECK(p.stages[3].compute.at(Tier::Cloud) == 0.113);
    CHECK(p.stages[3].compute.at(Tier::Edge) == 0.433);

    auto cloud = end_to_end_latency(p, "cloud-only");
    auto edge = end_to_end_latency(p, "edge-only");
    CHECK(cloud.total == doctest::Approx(96.7).epsilon(0.02));
    CHECK(edge.total == doctest::Approx(12.1).epsilon(0.02));
    CHECK(end_to_end_latency(p, "video-generator") == cloud);
    CHECK(end_to_end_latency(p, "face-recognition").total == edge.total);

    auto report = sweep_partitions(p);
    REQUIRE(report.argmin);
    CHECK(report.rows[*report.argmin].partition == "motion-detection");
    CHECK(report.rows[*report.argmin].total == doctest::Approx(11.5).epsilon(0.02));
    CHECK(edge.total / report.rows[*report.argmin].total == doctest::Approx(1.05).epsilon(0.01));

    auto best = end_to_end_latency(p, "motion-detection");
    std::vector<Tier> tiers;
    for (const auto& s : best.stages) {
        tiers.push_back(s.tier);
    }
    CHECK(tiers == std::vector<Tier>{Tier::Iot, Tier::Edge, Tier::Edge, Tier::Cloud, Tier::Cloud, Tier::Cloud});
    CHECK(best.total == doctest::Approx(best.compute_total + best.transfer_total));
    CHECK(error_of([&] { end_to_end_latency(p, "no-such-stage"); }) == Errc::UnknownStage);
}

TEST_CASE("trivial profiles")
{
    LatencyProfile zero;
    for (const char* n : {"a", "b", "c"}) {
        zero.stages.push_back({n, 0, {{Tier::Iot, 0.0}, {Tier::Edge, 0.0}, {Tier::Cloud, 0.0}}, 0.0, 0.0});
    }
    CHECK(end_to_end_latency(zero, "b").total == 0.0);

    // Identical stages: every partition costs the same and the first wins.
    LatencyProfile uniform;
    for (const char* n : {"a", "b", "c", "d"}) {
        uniform.stages.push_back({n, 10, {{Tier::Iot, 1.0}, {Tier::Edge, 1.0}, {Tier::Cloud, 1.0}}, 0.5, 0.5});
    }
    auto report = sweep_partitions(uniform);
    REQUIRE(report.rows.size() == 4);
    for (const auto& row : report.rows) {
        CHECK(row.total == report.rows.front().total);
    }
    CHECK(report.argmin == 0u);
    CHECK(sweep_partitions(LatencyProfile{}).rows.empty());
}

TEST_CASE("profile validation and yaml round trip")
{
    auto p = calibrated();
    CHECK(LatencyProfile::parse(p.to_yaml()) == p);
    auto bad = p;
    bad.stages[2].upload_to_edge = -1.0;
    CHECK(error_of([&] { bad.validate(); }) == Errc::InvalidField);
    bad = p;
    bad.stages[2].name = bad.stages[1].name;
    CHECK(error_of([&] { bad.validate(); }) == Errc::InvalidField);
    CHECK(p.index_of("face-detection") == 3);
    CHECK(error_of([&] { p.index_of("nope"); }) == Errc::UnknownStage);
}

TEST_CASE("sweep matches exhaustive enumeration on random profiles")
{
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        auto p = testing::random_profile(rng);
        auto report = sweep_partitions(p);
        REQUIRE(report.rows.size() == p.stages.size());
        for (std::size_t k = 0; k < p.stages.size(); ++k) {
            CHECK(testing::relative_error(report.rows[k].total, testing::oracle_latency(p, k)) <= 1e-12);
        }
        CHECK(report.argmin == testing::oracle_best_partition(p));
    }
}

TEST_CASE("event trace totals equal the closed form")
{
    std::mt19937_64 rng(23);
    for (int i = 0; i < 300; ++i) {
        auto p = testing::random_profile(rng);
        for (std::size_t k = 0; k < p.stages.size(); ++k) {
            auto tiers = partition_tiers(p.stages.size(), k);
            auto trace = virtual_clock_run(pipeline_tasks(p, tiers));
            CHECK(std::abs(trace.makespan - end_to_end_latency(p, p.stages[k].name).total) <= 1e-9);
        }
    }
}

TEST_CASE("report formats")
{
    auto report = sweep_partitions(calibrated());
    auto csv = report_csv(report);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(parse_report_csv(csv) == report);

    std::mt19937_64 rng(4);
    for (int i = 0; i < 50; ++i) {
        auto r = sweep_partitions(testing::random_profile(rng));
        CHECK(parse_report_csv(report_csv(r)) == r);
    }

    auto empty = report_csv(PartitionReport{});
    CHECK(empty == "partition,total,compute_total,transfer_total,argmin,stages\n");
    CHECK(parse_report_csv(empty) == PartitionReport{});
    CHECK(error_of([] { parse_report_csv("garbage"); }) == Errc::InvalidField);

    CHECK(report_table(report).find("motion-detection") != std::string::npos);
    CHECK(report_svg(report).starts_with("<svg"));
    CHECK(report_format_from_name("svg") == ReportFormat::Svg);
    CHECK_FALSE(report_format_from_name("pdf"));

    auto dir = std::filesystem::temp_directory_path() / "edgefaas-report-test";
    std::filesystem::create_directories(dir);
    emit_report(report, ReportFormat::Csv, dir / "r.csv");
    CHECK(testing::read_file(dir / "r.csv") == csv);
    CHECK(error_of([&] { emit_report(report, ReportFormat::Csv, dir / "missing" / "r.csv"); }) == Errc::IoFailure);
    std::filesystem::remove_all(dir);
}

TEST_CASE("hierarchical average equals the global mean")
{
    CHECK(hierarchical_average({{{1.0, 0.0}}, {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}}) ==
          std::vector<double>{0.25, 0.75});
    std::mt19937_64 rng(29);
    for (int i = 0; i < 300; ++i) {
        auto groups = testing::random_worker_groups(rng, 4, 16, 64);
        CHECK(testing::vector_relative_error(hierarchical_average(groups), testing::oracle_global_mean(groups)) <=
              1e-12);
    }
}

TEST_CASE("video pipeline placements and trace")
{
    auto env = testing::SimEnv::from_file("three_tier_site1.yaml");
    auto profile = calibrated();
    auto run = run_video_pipeline(*env, *env.fabric, profile);
    using Nodes = std::vector<FabricNodeId>;
    CHECK(run.node_placements.at("video-generator") == Nodes{1, 2, 3, 4});
    CHECK(run.node_placements.at("video-processing") == Nodes{9});
    CHECK(run.node_placements.at("motion-detection") == Nodes{9});
    CHECK(run.node_placements.at("face-detection") == Nodes{11});
    CHECK(run.node_placements.at("face-extraction") == Nodes{11});
    CHECK(run.node_placements.at("face-recognition") == Nodes{11});
    CHECK(run.implied_partition == "motion-detection");
    CHECK(std::abs(run.total - end_to_end_latency(profile, run.implied_partition).total) <= 1e-9);
    // Every camera's frame passes every stage.
    CHECK(run.trace.events.size() == 4 * (2 * profile.stages.size() - 1));
    CHECK(run.stage_invocations >= profile.stages.size());
}

TEST_CASE("federated learning placements and aggregation")
{
    auto env = testing::SimEnv::from_file("three_tier_fabric.yaml");
    auto run = run_federated_learning(*env, *env.fabric, 2, 16);
    using Nodes = std::vector<FabricNodeId>;
    CHECK(run.node_placements.at("train") == Nodes{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(run.node_placements.at("firstaggregation") == Nodes{9, 10});
    CHECK(run.node_placements.at("secondaggregation") == Nodes{11});
    CHECK(run.contributors == 8.0);
    CHECK(run.first_level_firings == 4);
    CHECK(run.second_level_firings == 2);

    // The result is the plain mean of the last round's worker vectors.
    auto weights = seeded_worker_weights(7, 16);
    std::vector<std::vector<std::vector<double>>> all{{}};
    for (FabricNodeId w = 1; w <= 8; ++w) {
        all[0].push_back(weights(1, w));
    }
    CHECK(testing::vector_relative_error(run.weights, testing::oracle_global_mean(all)) <= 1e-12);
}

TEST_CASE("federated learning hand-computable means")
{
    {
        auto env = testing::SimEnv::from_file("three_tier_fabric.yaml");
        auto basis = [](std::size_t, FabricNodeId w) {
            std::vector<double> v(8, 0.0);
            v[w - 1] = 1.0;
            return v;
        };
        auto run = run_federated_learning(*env, *env.fabric, 1, 8, 7, basis);
        REQUIRE(run.weights.size() == 8);
        for (auto x : run.weights) {
            CHECK(x == doctest::Approx(0.125).epsilon(1e-12));
        }
    }
    {
        auto env = testing::SimEnv::from_file("three_tier_fabric.yaml");
        std::vector<double> v{0.5, -2.0, 3.25};
        auto run = run_federated_learning(*env, *env.fabric, 1, 3, 7, [&](std::size_t, FabricNodeId) { return v; });
        CHECK(run.weights == v);
    }
}

TEST_CASE("seeded worker weights are reproducible")
{
    auto a = seeded_worker_weights(3, 5);
    auto b = seeded_worker_weights(3, 5);
    CHECK(a(0, 1) == b(0, 1));
    CHECK(a(0, 1) != a(0, 2));
    CHECK(a(0, 1) != a(1, 1));
    for (auto x : a(2, 4)) {
        CHECK(x >= -1.0);
        CHECK(x < 1.0);
    }
}
