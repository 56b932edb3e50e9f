#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stallsim {

enum class InterconnectKind {
    SharedBus, // one bus, bandwidth divided among active GPUs (PCIe)
    Crossbar,  // point-to-point mesh; partial allocation degrades it (NVLink)
    Switch,    // switched fabric, no sharing penalty (NVSwitch)
};

const char* to_string(InterconnectKind kind);
InterconnectKind interconnect_kind_from_string(std::string_view s);

struct InterconnectSpec {
    InterconnectKind kind = InterconnectKind::SharedBus;
    double aggregate_bandwidth = 0.0; // bytes/second
    double per_link_latency = 0.0;    // seconds
    // Factor in (0,1] applied when a crossbar is only partially allocated to
    // the tenant. Defaults to a full crossbar.
    double slicing_penalty = 1.0;

    bool operator==(const InterconnectSpec&) const = default;
};

struct InstanceSpec {
    std::string name;
    int gpu_count = 1;
    int vcpus = 1;
    double gpu_memory = 0.0;  // bytes, per GPU
    double main_memory = 0.0; // bytes
    InterconnectSpec interconnect;
    double network_bandwidth = 0.0;   // bytes/second
    double network_latency = 0.0;     // seconds
    double disk_throughput = 0.0;     // bytes/second
    double cpu_prep_throughput = 0.0; // samples/second per data-loading worker
    double price_per_hour = 0.0;      // USD

    bool operator==(const InstanceSpec&) const = default;
};

struct Catalog {
    std::vector<InstanceSpec> instances;

    // nullptr when the name is absent.
    const InstanceSpec* find(std::string_view name) const;
    // DomainError when the name is absent.
    const InstanceSpec& at(std::string_view name) const;

    bool operator==(const Catalog&) const = default;
};

void validate(const InstanceSpec& spec);
void validate(const Catalog& catalog);

// Pure function of the file content: identical bytes yield identical catalogs.
Catalog parse_catalog(const std::string& json_text);
Catalog load_catalog(const std::string& path);

// Bandwidth a single GPU sees when `active_gpus` workers drive the
// interconnect at once. SharedBus divides the aggregate; a partially
// allocated Crossbar pays the slicing penalty; a Switch never shares.
double effective_per_gpu_bandwidth(const InstanceSpec& inst, int active_gpus);

} // namespace stallsim
