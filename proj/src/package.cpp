#include "edgefaas/backends.hpp"

#include <zlib.h>

#include <fstream>
#include <sstream>

namespace edgefaas {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralSig = 0x06054b50;
constexpr std::size_t kEndOfCentralSize = 22;

std::uint32_t read_le(std::string_view data, std::size_t offset, int width)
{
    if (offset + width > data.size()) {
        fail(Errc::BadPackage, "truncated zip archive");
    }
    std::uint32_t value = 0;
    for (int i = width - 1; i >= 0; --i) {
        value = (value << 8) | static_cast<unsigned char>(data[offset + i]);
    }
    return value;
}

void write_le(std::string& out, std::uint32_t value, int width)
{
    for (int i = 0; i < width; ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
    }
}

std::uint32_t crc_of(std::string_view bytes)
{
    return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string inflate_raw(std::string_view compressed, std::size_t expected_size)
{
    std::string out(expected_size, '\0');
    z_stream stream{};
    if (inflateInit2(&stream, -MAX_WBITS) != Z_OK) {
        fail(Errc::BadPackage, "cannot initialise inflate");
    }
    stream.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    stream.avail_in = static_cast<uInt>(compressed.size());
    stream.next_out = reinterpret_cast<Bytef*>(out.data());
    stream.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&stream, Z_FINISH);
    inflateEnd(&stream);
    if (rc != Z_STREAM_END || stream.total_out != expected_size) {
        fail(Errc::BadPackage, "corrupt deflate stream");
    }
    return out;
}

std::map<Tier, double> compute_from_json(const json& value)
{
    std::map<Tier, double> out;
    for (auto& [tier_name, seconds] : value.items()) {
        auto tier = tier_from_name(tier_name);
        if (!tier) {
            fail(Errc::BadPackage, "unknown tier in compute table: " + tier_name);
        }
        out[*tier] = seconds.get<double>();
    }
    return out;
}

} // namespace

std::string_view to_string(Behavior behavior) noexcept
{
    switch (behavior) {
    case Behavior::Echo: return "echo";
    case Behavior::FixedOutput: return "fixed-output";
    case Behavior::Delay: return "delay";
    case Behavior::VectorAverage: return "vector-average";
    }
    return "echo";
}

std::optional<Behavior> behavior_from_name(std::string_view name) noexcept
{
    for (auto b : {Behavior::Echo, Behavior::FixedOutput, Behavior::Delay, Behavior::VectorAverage}) {
        if (name == to_string(b)) {
            return b;
        }
    }
    return std::nullopt;
}

json to_json(const PackageDescriptor& d)
{
    json compute = json::object();
    for (const auto& [tier, seconds] : d.synthetic.compute) {
        compute[std::string(to_string(tier))] = seconds;
    }
    return json{
      {"handler", d.handler},
      {"image", d.image},
      {"labels", d.labels},
      {"behavior", to_string(d.synthetic.behavior)},
      {"output_size", d.synthetic.output_size},
      {"compute", compute},
    };
}

PackageDescriptor descriptor_from_json(const json& v)
{
    PackageDescriptor d;
    try {
        d.handler = v.at("handler").get<std::string>();
        d.image = v.value("image", std::string{});
        d.labels = v.value("labels", std::map<std::string, std::string>{});
        auto behavior = behavior_from_name(v.value("behavior", std::string("echo")));
        if (!behavior) {
            fail(Errc::BadPackage, "unknown behavior " + v.value("behavior", std::string{}));
        }
        d.synthetic.behavior = *behavior;
        d.synthetic.output_size = v.value("output_size", std::uint64_t{0});
        if (v.contains("compute")) {
            d.synthetic.compute = compute_from_json(v.at("compute"));
        }
    } catch (const json::exception& e) {
        fail(Errc::BadPackage, std::string("bad descriptor: ") + e.what());
    }
    if (d.handler.empty()) {
        fail(Errc::BadPackage, "descriptor must name a handler");
    }
    return d;
}

std::map<std::string, std::string> read_zip(std::string_view archive)
{
    if (archive.size() < kEndOfCentralSize) {
        fail(Errc::BadPackage, "not a zip archive");
    }
    // The end record sits at the tail, possibly followed by a comment.
    std::size_t eocd = std::string_view::npos;
    for (std::size_t pos = archive.size() - kEndOfCentralSize;; --pos) {
        if (read_le(archive, pos, 4) == kEndOfCentralSig) {
            eocd = pos;
            break;
        }
        if (pos == 0 || archive.size() - pos > kEndOfCentralSize + 0xFFFF) {
            break;
        }
    }
    if (eocd == std::string_view::npos) {
        fail(Errc::BadPackage, "zip end-of-central-directory record not found");
    }
    auto entries = read_le(archive, eocd + 10, 2);
    std::size_t cursor = read_le(archive, eocd + 16, 4);

    std::map<std::string, std::string> files;
    for (std::uint32_t i = 0; i < entries; ++i) {
        if (read_le(archive, cursor, 4) != kCentralHeaderSig) {
            fail(Errc::BadPackage, "corrupt zip central directory");
        }
        auto method = read_le(archive, cursor + 10, 2);
        auto crc = read_le(archive, cursor + 16, 4);
        auto compressed_size = read_le(archive, cursor + 20, 4);
        auto size = read_le(archive, cursor + 24, 4);
        auto name_len = read_le(archive, cursor + 28, 2);
        auto extra_len = read_le(archive, cursor + 30, 2);
        auto comment_len = read_le(archive, cursor + 32, 2);
        auto local = read_le(archive, cursor + 42, 4);
        if (cursor + 46 + name_len > archive.size()) {
            fail(Errc::BadPackage, "truncated zip central directory");
        }
        std::string name(archive.substr(cursor + 46, name_len));
        cursor += 46 + name_len + extra_len + comment_len;

        if (read_le(archive, local, 4) != kLocalHeaderSig) {
            fail(Errc::BadPackage, "corrupt zip local header for " + name);
        }
        std::size_t data = local + 30 + read_le(archive, local + 26, 2) + read_le(archive, local + 28, 2);
        if (data + compressed_size > archive.size()) {
            fail(Errc::BadPackage, "truncated zip entry " + name);
        }
        auto raw = archive.substr(data, compressed_size);
        if (!name.empty() && name.back() == '/') {
            continue;  // directory entry
        }
        std::string content;
        if (method == 0) {
            content = std::string(raw);
        } else if (method == 8) {
            content = inflate_raw(raw, size);
        } else {
            fail(Errc::BadPackage, "unsupported zip compression method " + std::to_string(method));
        }
        if (content.size() != size || crc_of(content) != crc) {
            fail(Errc::BadPackage, "checksum mismatch in zip entry " + name);
        }
        files.emplace(std::move(name), std::move(content));
    }
    return files;
}

std::string write_zip(const std::map<std::string, std::string>& files)
{
    std::string out;
    std::string central;
    for (const auto& [name, content] : files) {
        auto offset = static_cast<std::uint32_t>(out.size());
        auto crc = crc_of(content);
        auto size = static_cast<std::uint32_t>(content.size());
        auto name_len = static_cast<std::uint32_t>(name.size());

        write_le(out, kLocalHeaderSig, 4);
        write_le(out, 20, 2);  // version needed
        write_le(out, 0, 2);   // flags
        write_le(out, 0, 2);   // stored
        write_le(out, 0, 2);   // time
        write_le(out, 0x21, 2);  // date 1980-01-01
        write_le(out, crc, 4);
        write_le(out, size, 4);
        write_le(out, size, 4);
        write_le(out, name_len, 2);
        write_le(out, 0, 2);
        out += name;
        out += content;

        write_le(central, kCentralHeaderSig, 4);
        write_le(central, 20, 2);  // made by
        write_le(central, 20, 2);  // needed
        write_le(central, 0, 2);
        write_le(central, 0, 2);
        write_le(central, 0, 2);
        write_le(central, 0x21, 2);
        write_le(central, crc, 4);
        write_le(central, size, 4);
        write_le(central, size, 4);
        write_le(central, name_len, 2);
        write_le(central, 0, 2);  // extra
        write_le(central, 0, 2);  // comment
        write_le(central, 0, 2);  // disk
        write_le(central, 0, 2);  // internal attrs
        write_le(central, 0, 4);  // external attrs
        write_le(central, offset, 4);
        central += name;
    }
    auto central_offset = static_cast<std::uint32_t>(out.size());
    out += central;
    write_le(out, kEndOfCentralSig, 4);
    write_le(out, 0, 2);
    write_le(out, 0, 2);
    write_le(out, static_cast<std::uint32_t>(files.size()), 2);
    write_le(out, static_cast<std::uint32_t>(files.size()), 2);
    write_le(out, static_cast<std::uint32_t>(central.size()), 4);
    write_le(out, central_offset, 4);
    write_le(out, 0, 2);
    return out;
}

DeploymentPackage package_from_archive(std::string_view archive, std::string location)
{
    auto files = read_zip(archive);
    auto it = files.find(std::string(kDescriptorName));
    if (it == files.end()) {
        fail(Errc::BadPackage, location + " has no " + std::string(kDescriptorName));
    }
    auto parsed = json::parse(it->second, nullptr, false);
    if (parsed.is_discarded()) {
        fail(Errc::BadPackage, "descriptor is not JSON");
    }
    DeploymentPackage package;
    package.location = std::move(location);
    package.descriptor = descriptor_from_json(parsed);
    if (files.count(package.descriptor.handler) == 0) {
        fail(Errc::BadPackage, "handler " + package.descriptor.handler + " missing from archive");
    }
    return package;
}

DeploymentPackage load_package(const std::filesystem::path& archive)
{
    std::ifstream in(archive, std::ios::binary);
    if (!in) {
        fail(Errc::BadPackage, "cannot read package " + archive.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return package_from_archive(buffer.str(), archive.string());
}

void write_package(const std::filesystem::path& archive, const PackageDescriptor& descriptor,
                   const std::map<std::string, std::string>& files)
{
    auto contents = files;
    contents[std::string(kDescriptorName)] = to_json(descriptor).dump(2);
    if (contents.count(descriptor.handler) == 0) {
        contents[descriptor.handler] = "# synthetic handler\n";
    }
    std::ofstream out(archive, std::ios::binary | std::ios::trunc);
    out << write_zip(contents);
    if (!out) {
        fail(Errc::IoFailure, "cannot write " + archive.string());
    }
}

json to_json(const FunctionDescription& d)
{
    return json{
      {"name", d.name},
      {"status", d.status},
      {"replicas", d.replicas},
      {"invocationCount", d.invocation_count},
      {"image", d.image},
      {"url", d.url},
      {"labels", d.labels},
    };
}

} // namespace edgefaas
