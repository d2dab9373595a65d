#pragma once

#include "edgefaas/error.hpp"
#include "edgefaas/mapping_store.hpp"

#include <optional>
#include <string>

namespace edgefaas {

// What a backend receives on invocation: the user payload plus where and why
// it was dispatched.
struct InvocationEnvelope {
    std::string payload;  // raw bytes
    ResourceId resource_id = 0;
    std::string application;
    std::string function;
    std::string invocation_id;
    bool sync = true;

    friend bool operator==(const InvocationEnvelope&, const InvocationEnvelope&) = default;
};

// {"payload": ..., "edgefaas": {...}}. Payloads that are not UTF-8 travel as
// base64 with "encoding": "base64".
json to_json(const InvocationEnvelope& envelope);
std::optional<InvocationEnvelope> envelope_from_json(const json& value);

// User payload of an envelope body; any other body is returned unchanged.
std::string envelope_payload(const std::string& body);

} // namespace edgefaas
