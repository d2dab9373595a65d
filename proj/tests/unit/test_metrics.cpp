#include "edgefaas/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace edgefaas;
using testing::sample_record;

namespace {

ResourceRecord single_node(std::uint64_t memory, std::uint32_t cpu)
{
    auto r = sample_record("edge", 1);
    r.resource_id = 4;
    r.node = 1;
    r.memory = memory;
    r.cpu = cpu;
    return r;
}

ResourceRecord sample_cloud()
{
    auto r = parse_resource_manifest(testing::read_file(testing::data_path("sample_resource.yaml"))).record;
    r.resource_id = 0;
    return r;
}

} // namespace

TEST_CASE("an idle simulated resource reports zero usage")
{
    testing::ManualClock clock;
    SimulatedMetricsProvider sim(clock.fn());
    auto r = sample_cloud();
    auto snap = sim.fetch(r);
    CHECK(snap.resource_id == 0);
    CHECK(snap.cpu_used == 0.0);
    CHECK(snap.memory_used == 0);
    CHECK(snap.gpu_used == 0.0);
    CHECK(snap.io_bandwidth_used == 0.0);
    CHECK(snap.per_node_load == std::vector<double>(10, 0.0));
    CHECK(snap.timestamp == 1000.0);
}

TEST_CASE("the simulated provider echoes configured load")
{
    SimulatedMetricsProvider sim;
    auto r = single_node(64ull << 30, 8);
    sim.set_load(r.resource_id, 2.0, 60ull << 30, 0.0, 5e6);
    auto snap = sim.fetch(r);
    CHECK(snap.memory_used == 60ull << 30);
    CHECK(snap.cpu_used == 2.0);
    CHECK(snap.io_bandwidth_used == 5e6);
    CHECK(available(r, snap).memory_free == 4ull << 30);
    CHECK(load_fraction(r, snap) == doctest::Approx(0.25));

    // Usage beyond capacity is clamped to the snapshot invariant.
    sim.set_load(r.resource_id, 100.0, 100ull << 30);
    snap = sim.fetch(r);
    CHECK(snap.cpu_used == 8.0);
    CHECK(snap.memory_used == 64ull << 30);
}

TEST_CASE("unreachable and stale metrics are unavailable")
{
    testing::ManualClock clock;
    SimulatedMetricsProvider sim(clock.fn());
    auto r = single_node(1ull << 30, 1);
    sim.set_unreachable(r.resource_id);
    try {
        sim.fetch(r);
        FAIL("expected MetricsUnavailable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MetricsUnavailable);
    }
    sim.set_unreachable(r.resource_id, false);
    CHECK_NOTHROW(fetch_snapshot(sim, r, *clock.now, 60.0));

    sim.set_sample_time(r.resource_id, *clock.now - 61.0);
    CHECK_THROWS_AS(fetch_snapshot(sim, r, *clock.now, 60.0), Error);
    sim.set_sample_time(r.resource_id, *clock.now - 60.0);
    CHECK_NOTHROW(fetch_snapshot(sim, r, *clock.now, 60.0));
    sim.clear();
    CHECK(sim.fetch(r).timestamp == *clock.now);
}

TEST_CASE("available is capacity minus usage")
{
    auto r = single_node(64ull << 30, 10);
    MetricsSnapshot snap;
    snap.resource_id = r.resource_id;
    CHECK(available(r, snap).memory_free == 64ull << 30);
    snap.cpu_used = 10.0;
    CHECK(available(r, snap).cpu_free == 0.0);

    auto cloud = sample_cloud();
    MetricsSnapshot used;
    used.resource_id = cloud.resource_id;
    used.memory_used = 128ull << 30;
    used.cpu_used = 20.0;
    used.gpu_used = 30.0;
    auto a = available(cloud, used);
    CHECK(a.memory_free == 512ull << 30);
    CHECK(a.cpu_free == 300.0);
    CHECK(a.gpu_free == 2.0);

    used.resource_id = 9;
    try {
        available(cloud, used);
        FAIL("expected MismatchedResource");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MismatchedResource);
    }
}

TEST_CASE("available never goes negative and never grows with usage")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        auto r = single_node((rng() % 64 + 1) << 30, static_cast<std::uint32_t>(rng() % 32 + 1));
        r.node = static_cast<std::uint32_t>(rng() % 4 + 1);
        r.gpunode = static_cast<std::uint32_t>(rng() % (r.node + 1));
        r.gpu = r.gpunode ? static_cast<std::uint32_t>(rng() % 4) : 0;
        MetricsSnapshot a;
        a.resource_id = r.resource_id;
        a.cpu_used = unit(rng) * 2 * r.total_cpu();
        a.memory_used = static_cast<std::uint64_t>(unit(rng) * 2 * static_cast<double>(r.total_memory()));
        a.gpu_used = unit(rng) * 8;
        auto b = a;
        b.cpu_used += unit(rng) * 10;
        b.memory_used += rng() % (8ull << 30);
        b.gpu_used += unit(rng) * 2;
        auto fa = available(r, a);
        auto fb = available(r, b);
        CHECK(fa.cpu_free >= 0.0);
        CHECK(fa.gpu_free >= 0.0);
        CHECK(fb.memory_free <= fa.memory_free);
        CHECK(fb.cpu_free <= fa.cpu_free);
        CHECK(fb.gpu_free <= fa.gpu_free);
        CHECK(fa.memory_free == (a.memory_used >= r.total_memory() ? 0 : r.total_memory() - a.memory_used));
    }
}
