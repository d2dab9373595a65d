#include "edgefaas/error.hpp"
#include "edgefaas/functions.hpp"
#include "edgefaas/util.hpp"

#include <doctest.h>

#include <random>

using namespace edgefaas;

TEST_CASE("capacity strings use base 1024 suffixes")
{
    CHECK(parse_capacity("64GB") == 64ull << 30);
    CHECK(parse_capacity("512GB") == 512ull << 30);
    CHECK(parse_capacity("1KB") == 1024u);
    CHECK(parse_capacity("3MB") == 3ull << 20);
    CHECK(parse_capacity("2TB") == 2ull << 40);
    CHECK(parse_capacity("12345") == 12345u);
    CHECK(parse_capacity(" 4 gb ") == 4ull << 30);
    CHECK_FALSE(parse_capacity("1.5GB"));
    CHECK_FALSE(parse_capacity("GB"));
    CHECK_FALSE(parse_capacity(""));
    CHECK_FALSE(parse_capacity("-1GB"));
    CHECK_FALSE(parse_capacity("10GiB"));
    CHECK_FALSE(parse_capacity("99999999999999999999TB"));
}

TEST_CASE("format_capacity picks the largest exact unit and parses back")
{
    CHECK(format_capacity(64ull << 30) == "64GB");
    CHECK(format_capacity(1536) == "1536");
    CHECK(format_capacity(0) == "0");
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        std::uint64_t v = rng() >> (rng() % 40 + 4);
        CHECK(parse_capacity(format_capacity(v)) == v);
    }
}

TEST_CASE("endpoints are host:port")
{
    auto e = parse_endpoint("10.107.30.249:8080");
    REQUIRE(e);
    CHECK(e->host == "10.107.30.249");
    CHECK(e->port == 8080);
    CHECK(e->str() == "10.107.30.249:8080");
    CHECK(parse_endpoint("node-9.sim:1"));
    CHECK_FALSE(parse_endpoint("host"));
    CHECK_FALSE(parse_endpoint(":80"));
    CHECK_FALSE(parse_endpoint("host:"));
    CHECK_FALSE(parse_endpoint("host:0"));
    CHECK_FALSE(parse_endpoint("host:65536"));
    CHECK_FALSE(parse_endpoint("ho st:80"));
    CHECK_FALSE(parse_endpoint("http://host:80"));
}

TEST_CASE("base64 round-trips arbitrary bytes")
{
    CHECK(base64_encode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    CHECK(base64_decode("Zm9vYg==") == std::string("foob"));
    CHECK_FALSE(base64_decode("Zm9v!"));
    std::mt19937 rng(3);
    for (int i = 0; i < 300; ++i) {
        std::string bytes(rng() % 200, '\0');
        for (auto& c : bytes) {
            c = static_cast<char>(rng());
        }
        CHECK(base64_decode(base64_encode(bytes)) == bytes);
    }
}

TEST_CASE("utf8 validation")
{
    CHECK(is_valid_utf8("plain"));
    CHECK(is_valid_utf8("gr\xc3\xbc\xc3\x9f"));
    CHECK_FALSE(is_valid_utf8("\xff"));
    CHECK_FALSE(is_valid_utf8("\xc3"));
    CHECK_FALSE(is_valid_utf8("\xc0\xaf"));  // overlong
}

TEST_CASE("file names and qualified function names")
{
    CHECK(file_name_of("/tmp/model.bin") == "model.bin");
    CHECK(file_name_of("model.bin") == "model.bin");
    CHECK(file_name_of("a/b/c") == "c");

    CHECK(qualified_name("videopipeline", "video-generator") == "videopipeline.video-generator");
    auto split = split_qualified("my.app.fn_1");
    REQUIRE(split);
    CHECK(split->first == "my.app");
    CHECK(split->second == "fn_1");
    CHECK_FALSE(split_qualified("nodot"));
    CHECK_FALSE(split_qualified("App.fn"));
    CHECK_FALSE(split_qualified("app."));
}

TEST_CASE("error codes carry names and resources")
{
    CHECK(to_string(Errc::ResourceBusy) == "ResourceBusy");
    CHECK(to_string(Errc::IoFailure) == "IoFailure");
    try {
        fail(Errc::InvokeFailure, "boom", {3, 4});
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InvokeFailure);
        CHECK(std::string(e.what()) == "InvokeFailure: boom");
        CHECK(e.resource_ids() == std::vector<ResourceId>{3, 4});
    }
}
