#include "edgefaas/envelope.hpp"

#include "edgefaas/util.hpp"

namespace edgefaas {

json to_json(const InvocationEnvelope& e)
{
    json meta{
      {"resource_id", e.resource_id},
      {"application", e.application},
      {"function", e.function},
      {"invocation_id", e.invocation_id},
      {"sync", e.sync},
    };
    json out;
    if (is_valid_utf8(e.payload)) {
        out["payload"] = e.payload;
    } else {
        out["payload"] = base64_encode(e.payload);
        meta["encoding"] = "base64";
    }
    out["edgefaas"] = std::move(meta);
    return out;
}

std::optional<InvocationEnvelope> envelope_from_json(const json& value)
{
    if (!value.is_object() || !value.contains("edgefaas") || !value.contains("payload")) {
        return std::nullopt;
    }
    const auto& meta = value.at("edgefaas");
    const auto& payload = value.at("payload");
    if (!meta.is_object() || !payload.is_string()) {
        return std::nullopt;
    }
    InvocationEnvelope e;
    try {
        e.resource_id = meta.at("resource_id").get<ResourceId>();
        e.application = meta.value("application", std::string{});
        e.function = meta.value("function", std::string{});
        e.invocation_id = meta.value("invocation_id", std::string{});
        e.sync = meta.value("sync", true);
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (meta.value("encoding", std::string{}) == "base64") {
        auto bytes = base64_decode(payload.get<std::string>());
        if (!bytes) {
            return std::nullopt;
        }
        e.payload = std::move(*bytes);
    } else {
        e.payload = payload.get<std::string>();
    }
    return e;
}

std::string envelope_payload(const std::string& body)
{
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        return body;
    }
    auto envelope = envelope_from_json(parsed);
    return envelope ? envelope->payload : body;
}

} // namespace edgefaas
