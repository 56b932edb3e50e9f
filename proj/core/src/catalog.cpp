#include "stallsim/catalog.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "stallsim/errors.hpp"
#include "stallsim/units.hpp"

namespace stallsim {

using nlohmann::json;

const char* to_string(InterconnectKind kind) {
    switch (kind) {
    case InterconnectKind::SharedBus: return "shared_bus";
    case InterconnectKind::Crossbar: return "crossbar";
    case InterconnectKind::Switch: return "switch";
    }
    return "unknown";
}

InterconnectKind interconnect_kind_from_string(std::string_view s) {
    if (s == "shared_bus") return InterconnectKind::SharedBus;
    if (s == "crossbar") return InterconnectKind::Crossbar;
    if (s == "switch") return InterconnectKind::Switch;
    throw ValidationError("interconnect.kind: unknown value \"" + std::string(s) +
                          "\" (expected shared_bus, crossbar or switch)");
}

const InstanceSpec* Catalog::find(std::string_view name) const {
    for (const auto& inst : instances) {
        if (inst.name == name) return &inst;
    }
    return nullptr;
}

const InstanceSpec& Catalog::at(std::string_view name) const {
    if (const auto* inst = find(name)) return *inst;
    throw DomainError("instance \"" + std::string(name) + "\" not in catalog");
}

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

} // namespace

void validate(const InstanceSpec& spec) {
    const std::string& n = spec.name;
    require(!n.empty(), "instance name: must be non-empty");
    require(spec.gpu_count >= 1, n + ": gpu_count must be >= 1");
    require(spec.vcpus >= 1, n + ": vcpus must be >= 1");
    require(spec.gpu_memory > 0, n + ": gpu_memory_gb must be > 0");
    require(spec.main_memory > 0, n + ": main_memory_gb must be > 0");
    require(spec.interconnect.aggregate_bandwidth > 0,
            n + ": interconnect.aggregate_bandwidth_gbps must be > 0");
    require(spec.interconnect.per_link_latency >= 0,
            n + ": interconnect.latency_us must be >= 0");
    require(spec.interconnect.slicing_penalty > 0 && spec.interconnect.slicing_penalty <= 1,
            n + ": interconnect.slicing_penalty must be in (0, 1]");
    require(spec.network_bandwidth > 0, n + ": network_bandwidth_gbps must be > 0");
    require(spec.network_latency >= 0, n + ": network_latency_us must be >= 0");
    require(spec.disk_throughput > 0, n + ": disk_throughput_mbps must be > 0");
    require(spec.cpu_prep_throughput > 0, n + ": cpu_prep_throughput_sps must be > 0");
    require(spec.price_per_hour > 0, n + ": price_per_hour_usd must be > 0");
}

void validate(const Catalog& catalog) {
    require(!catalog.instances.empty(), "catalog: instances must be non-empty");
    std::unordered_set<std::string> seen;
    for (const auto& inst : catalog.instances) {
        validate(inst);
        if (!seen.insert(inst.name).second) {
            throw ValidationError("catalog: duplicate instance name \"" + inst.name + "\"");
        }
    }
}

namespace {

double number_field(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key)) throw ValidationError(ctx + ": missing field " + key);
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ValidationError(ctx + ": field " + key + " must be a number");
    return v.get<double>();
}

int int_field(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key)) throw ValidationError(ctx + ": missing field " + key);
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
        throw ValidationError(ctx + ": field " + key + " must be an integer");
    }
    return v.get<int>();
}

std::string string_field(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key)) throw ValidationError(ctx + ": missing field " + key);
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ValidationError(ctx + ": field " + key + " must be a string");
    return v.get<std::string>();
}

InterconnectSpec parse_interconnect(const json& obj, const std::string& ctx) {
    InterconnectSpec spec;
    spec.kind = interconnect_kind_from_string(string_field(obj, "kind", ctx));
    spec.aggregate_bandwidth =
        units::gbps_to_bytes_per_second(number_field(obj, "aggregate_bandwidth_gbps", ctx));
    spec.per_link_latency =
        units::microseconds_to_seconds(number_field(obj, "latency_us", ctx));
    if (obj.contains("slicing_penalty")) {
        spec.slicing_penalty = number_field(obj, "slicing_penalty", ctx);
    }
    return spec;
}

InstanceSpec parse_instance(const json& obj) {
    if (!obj.is_object()) throw ValidationError("catalog: instance entries must be objects");
    InstanceSpec spec;
    spec.name = string_field(obj, "name", "instance");
    const std::string& ctx = spec.name;
    spec.gpu_count = int_field(obj, "gpu_count", ctx);
    spec.vcpus = int_field(obj, "vcpus", ctx);
    spec.gpu_memory = units::gib_to_bytes(number_field(obj, "gpu_memory_gb", ctx));
    spec.main_memory = units::gib_to_bytes(number_field(obj, "main_memory_gb", ctx));
    if (!obj.contains("interconnect") || !obj.at("interconnect").is_object()) {
        throw ValidationError(ctx + ": missing interconnect object");
    }
    spec.interconnect = parse_interconnect(obj.at("interconnect"), ctx + ".interconnect");
    spec.network_bandwidth =
        units::gbps_to_bytes_per_second(number_field(obj, "network_bandwidth_gbps", ctx));
    spec.network_latency =
        units::microseconds_to_seconds(number_field(obj, "network_latency_us", ctx));
    spec.disk_throughput =
        units::mbps_to_bytes_per_second(number_field(obj, "disk_throughput_mbps", ctx));
    spec.cpu_prep_throughput = number_field(obj, "cpu_prep_throughput_sps", ctx);
    spec.price_per_hour = number_field(obj, "price_per_hour_usd", ctx);
    return spec;
}

} // namespace

Catalog parse_catalog(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("catalog: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("instances") || !doc.at("instances").is_array()) {
        throw ValidationError("catalog: expected an object with an \"instances\" array");
    }
    Catalog catalog;
    for (const auto& entry : doc.at("instances")) {
        catalog.instances.push_back(parse_instance(entry));
    }
    validate(catalog);
    return catalog;
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("catalog: file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_catalog(buf.str());
}

double effective_per_gpu_bandwidth(const InstanceSpec& inst, int active_gpus) {
    if (active_gpus < 1 || active_gpus > inst.gpu_count) {
        throw DomainError(inst.name + ": active_gpus must be in [1, " +
                          std::to_string(inst.gpu_count) + "], got " +
                          std::to_string(active_gpus));
    }
    const InterconnectSpec& ic = inst.interconnect;
    switch (ic.kind) {
    case InterconnectKind::SharedBus:
        return ic.aggregate_bandwidth / active_gpus;
    case InterconnectKind::Crossbar:
        return active_gpus < inst.gpu_count ? ic.aggregate_bandwidth * ic.slicing_penalty
                                            : ic.aggregate_bandwidth;
    case InterconnectKind::Switch:
        return ic.aggregate_bandwidth;
    }
    throw DomainError("unreachable interconnect kind");
}

} // namespace stallsim
