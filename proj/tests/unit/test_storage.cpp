#include "edgefaas/harness.hpp"
#include "edgefaas/object_url.hpp"
#include "edgefaas/storage.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace edgefaas;

namespace {

Errc error_of(const std::function<void()>& body)
{
    try {
        body();
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::IoFailure;  // sentinel: no error
}

struct Fabric {
    testing::SimEnv env = testing::SimEnv::from_file("three_tier_fabric.yaml");
    std::map<FabricNodeId, ResourceId> ids;

    Fabric() { ids = register_fabric(env->registry(), env.fabric->topology()); }

    StorageService& storage() { return env->storage(); }
    ResourceId rid(FabricNodeId n) const { return ids.at(n); }
};

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / "edgefaas-storage-test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("bucket names")
{
    CHECK(valid_bucket_name("frames"));
    CHECK(valid_bucket_name("a-b-c"));
    CHECK(valid_bucket_name(std::string(63, 'a')));
    CHECK_FALSE(valid_bucket_name(std::string(64, 'a')));
    CHECK_FALSE(valid_bucket_name("AB"));
    CHECK_FALSE(valid_bucket_name("ab"));
    CHECK_FALSE(valid_bucket_name("Abc"));
    CHECK_FALSE(valid_bucket_name("-abc"));
    CHECK_FALSE(valid_bucket_name("abc-"));
    CHECK_FALSE(valid_bucket_name("a_bc"));
    CHECK(namespaced_bucket("videopipeline", "frames") == "videopipeline-frames");
}

TEST_CASE("bucket lifecycle")
{
    Fabric f;
    auto& s = f.storage();
    CHECK(s.list_buckets("videopipeline").empty());
    PlacementHints camera;
    camera.generator = f.rid(1);
    CHECK(s.create_bucket("videopipeline", "frames", camera) == f.rid(1));
    CHECK(s.bucket_resource("videopipeline", "frames") == f.rid(1));
    CHECK(error_of([&] { s.create_bucket("videopipeline", "frames"); }) == Errc::BucketExists);
    CHECK(error_of([&] { s.create_bucket("videopipeline", "AB"); }) == Errc::InvalidBucketName);
    CHECK(error_of([&] { s.create_bucket("Bad-App", "frames"); }) == Errc::InvalidField);

    s.create_bucket("videopipeline", "a-bkt");
    s.create_bucket("videopipeline", "b-bkt");
    CHECK(s.list_buckets("videopipeline") == std::vector<std::string>{"a-bkt", "b-bkt", "frames"});

    s.put_bytes("videopipeline", "frames", "f0", "data");
    CHECK(error_of([&] { s.delete_bucket("videopipeline", "frames"); }) == Errc::BucketNotEmpty);
    s.delete_object("f0", "videopipeline", "frames");
    s.delete_bucket("videopipeline", "frames");
    CHECK(s.list_buckets("videopipeline") == std::vector<std::string>{"a-bkt", "b-bkt"});
    CHECK(error_of([&] { s.delete_bucket("videopipeline", "frames"); }) == Errc::UnknownBucket);
    CHECK_FALSE(f.env->store().contains(maps::kBucketMap, "videopipeline-frames"));

    // Dotted application names still make legal backend names.
    CHECK_NOTHROW(s.create_bucket("app.v2", "frames"));
}

TEST_CASE("applications never see each other's buckets")
{
    Fabric f;
    auto& s = f.storage();
    s.create_bucket("alpha", "shared");
    s.create_bucket("beta", "shared");
    s.put_bytes("alpha", "shared", "o", "from-alpha");
    s.put_bytes("beta", "shared", "o", "from-beta");
    CHECK(s.list_buckets("alpha") == std::vector<std::string>{"shared"});
    CHECK(s.list_buckets("beta") == std::vector<std::string>{"shared"});
    CHECK(s.get_bytes("alpha/shared/0/o") == "from-alpha");
    CHECK(s.get_bytes("beta/shared/0/o") == "from-beta");
    s.delete_object("o", "alpha", "shared");
    CHECK(s.list_objects("alpha", "shared").empty());
    CHECK(s.list_objects("beta", "shared") == std::vector<std::string>{"o"});
}

TEST_CASE("objects: urls, overwrite, listing, deletion")
{
    Fabric f;
    auto& s = f.storage();
    PlacementHints at9;
    at9.generator = f.rid(10);
    REQUIRE(f.rid(10) == 9);
    s.create_bucket("federatedlearning", "weights", at9);

    auto file = scratch("model.bin");
    {
        std::ofstream out(file, std::ios::binary);
        out << "weights-v1";
    }
    auto url = s.put_object(file, "federatedlearning", "weights");
    CHECK(url == "federatedlearning/weights/9/model.bin");

    auto back = scratch("model.out");
    s.get_object(url, back);
    CHECK(testing::read_file(back) == "weights-v1");

    s.put_bytes("federatedlearning", "weights", "model.bin", "A");
    s.put_bytes("federatedlearning", "weights", "model.bin", "B");
    CHECK(s.get_bytes(url) == "B");
    CHECK(f.env.fabric->object_version(10, "federatedlearning-weights", "model.bin") == 3);

    CHECK(s.list_objects("federatedlearning", "weights") == std::vector<std::string>{"model.bin"});
    s.put_bytes("federatedlearning", "weights", "a", "1");
    s.put_bytes("federatedlearning", "weights", "b", "2");
    CHECK(s.list_objects("federatedlearning", "weights").size() == 3);

    s.delete_object("a", "federatedlearning", "weights");
    CHECK(s.list_objects("federatedlearning", "weights") == std::vector<std::string>{"b", "model.bin"});
    CHECK(error_of([&] { s.delete_object("a", "federatedlearning", "weights"); }) == Errc::UnknownObject);
    CHECK(error_of([&] { s.put_bytes("federatedlearning", "nothing", "a", "1"); }) == Errc::UnknownBucket);
    CHECK(error_of([&] { s.list_objects("federatedlearning", "nothing"); }) == Errc::UnknownBucket);
    CHECK(error_of([&] { s.put_bytes("federatedlearning", "weights", "a/b", "1"); }) == Errc::InvalidField);
    std::filesystem::remove_all(file.parent_path());
}

TEST_CASE("get_object errors")
{
    Fabric f;
    auto& s = f.storage();
    s.create_bucket("a", "bkt");
    CHECK(error_of([&] { s.get_bytes("a/bkt/0/missing"); }) == Errc::UnknownObject);
    CHECK(error_of([&] { s.get_bytes("a/nothing/0/missing"); }) == Errc::UnknownObject);
    CHECK(error_of([&] { s.get_bytes("a/bkt/zero/missing"); }) == Errc::MalformedUrl);
    CHECK(error_of([&] { s.get_bytes("a/bkt/0"); }) == Errc::MalformedUrl);
    s.put_bytes("a", "bkt", "o", "x");
    CHECK(error_of([&] { s.get_bytes("a/bkt/3/o"); }) == Errc::MapMismatch);
}

TEST_CASE("put/get is byte exact from empty to eight megabytes")
{
    Fabric f;
    auto& s = f.storage();
    s.create_bucket("a", "blobs");
    std::mt19937_64 rng(99);
    for (std::size_t size : {std::size_t{0}, std::size_t{1}, std::size_t{4096}, std::size_t{8} << 20}) {
        std::string bytes(size, '\0');
        for (auto& c : bytes) {
            c = static_cast<char>(rng());
        }
        auto url = s.put_bytes("a", "blobs", "blob-" + std::to_string(size), bytes);
        CHECK(s.get_bytes(url) == bytes);
    }
}

TEST_CASE("data placement decision table")
{
    Fabric f;
    f.env->catalog().register_application(video_pipeline_manifest());
    auto& fns = f.env->functions();
    fns.deploy_function({"videopipeline", "video-generator", {}, {f.rid(1)}},
                        synthetic_package("g.py", Behavior::Echo));
    fns.deploy_function({"videopipeline", "video-processing", {}, {}}, synthetic_package("p.py", Behavior::Echo));
    REQUIRE(fns.candidates("videopipeline", "video-processing") == std::vector<ResourceId>{f.rid(9)});
    auto& s = f.storage();

    PlacementHints generator;
    generator.generator = f.rid(3);
    CHECK(s.place_data("videopipeline", "x", generator) == f.rid(3));

    // A 92 MB video stays where it is produced.
    PlacementHints large;
    large.expected_volume = 92ull << 20;
    large.producer_function = "videopipeline.video-generator";
    large.consumer_function = "videopipeline.video-processing";
    CHECK(s.place_data("videopipeline", "x", large) == f.rid(1));

    PlacementHints small = large;
    small.expected_volume = 1ull << 20;
    CHECK(s.place_data("videopipeline", "x", small) == f.rid(9));

    PlacementHints consumer;
    consumer.consumer = f.rid(9);
    CHECK(s.place_data("videopipeline", "x", consumer) == f.rid(9));

    CHECK(s.place_data("videopipeline", "x", {}) == 0);

    // Hints naming unknown resources fall through.
    PlacementHints ghost;
    ghost.generator = 500;
    CHECK(s.place_data("videopipeline", "x", ghost) == 0);

    // Unreachable stores are skipped.
    f.env.fabric->set_online(1, false);
    CHECK(s.place_data("videopipeline", "x", {}) == f.rid(2));
}

TEST_CASE("placement without any storage")
{
    testing::SimEnv env = testing::SimEnv::from_file("three_tier_site1.yaml");
    CHECK(error_of([&] { env->storage().place_data("a", "bkt", {}); }) == Errc::NoStorageCapacity);
}

TEST_CASE("object urls round-trip")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 1000; ++i) {
        auto u = testing::random_object_url(rng);
        auto text = u.render();
        auto parsed = ObjectUrl::parse(text);
        REQUIRE(parsed);
        CHECK(*parsed == u);
        CHECK(parsed->render() == text);
    }
    for (const char* bad : {"", "a/b/c", "a/b/1/o/x", "a//1/o", "/b/1/o", "a/b/1/", "a/b/-1/o", "a/b/01/o",
                            "a/b/1x/o", "a/b/99999999999/o"}) {
        CHECK_FALSE(ObjectUrl::parse(bad));
    }
}

TEST_CASE("random storage sequences match the model")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Fabric f;
        std::mt19937_64 rng(seed);
        auto failure = testing::storage_state_machine(*f.env, rng, 2000);
        CHECK_MESSAGE(failure.empty(), failure);
    }
}
