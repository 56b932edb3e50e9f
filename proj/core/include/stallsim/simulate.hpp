#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stallsim/catalog.hpp"
#include "stallsim/model.hpp"

namespace stallsim {

enum class Topology { SingleNode, Ring };

// Simple charges tau + g/B per synchronized layer. Ring charges the
// per-worker ring all-reduce volume plus one latency per ring step.
enum class CommMode { Simple, Ring };

const char* to_string(Topology t);
const char* to_string(CommMode m);
CommMode comm_mode_from_string(std::string_view s);

struct NodeGroup {
    InstanceSpec spec;
    int count = 1;

    bool operator==(const NodeGroup&) const = default;
};

struct ClusterConfig {
    std::vector<NodeGroup> nodes;
    int gpus_per_node_used = 1;
    Topology topology = Topology::SingleNode;

    int total_instances() const;
    int total_gpus() const;

    static ClusterConfig single_node(InstanceSpec spec, int gpus_used);
    static ClusterConfig ring(InstanceSpec spec, int node_count, int gpus_per_node);

    bool operator==(const ClusterConfig&) const = default;
};

struct DataConfig {
    std::int64_t total_samples = 0;
    int per_gpu_batch_size = 1;
    double cached_fraction = 0.0; // share of the dataset already in DRAM

    bool operator==(const DataConfig&) const = default;
};

struct RunFlags {
    // Training data pre-populated in GPU memory: no fetch, no prep.
    bool synthetic_data = false;
    // One worker on one GPU, synthetic data, no communication.
    bool single_gpu_baseline = false;
    // Forces cached_fraction = 0.
    bool cold_cache = false;

    bool operator==(const RunFlags&) const = default;
};

// Additive decomposition of one epoch. total is the sum of the five time
// components, accumulated as compute + interconnect + network + fetch + prep.
struct EpochTiming {
    double total = 0.0;
    double fetch = 0.0;
    double prep = 0.0;
    double compute = 0.0;
    double comm_interconnect_exposed = 0.0;
    double comm_network_exposed = 0.0;
    std::int64_t iterations = 0;

    bool operator==(const EpochTiming&) const = default;
};

// Bytes one worker sends for a ring all-reduce of `gradient_bytes` over
// `workers` participants: 2 * (G / n) * (n - 1).
double allreduce_per_worker_bytes(double gradient_bytes, int workers);

double layer_comm_time(double gradient_bytes, double tau, double bandwidth,
                       int workers, CommMode mode);

// Sum of layer_comm_time over the layers that synchronize gradients.
double model_comm_time(const ModelDescriptor& model, double tau, double bandwidth,
                       int workers, CommMode mode);

EpochTiming simulate_epoch(const ClusterConfig& cluster, const ModelDescriptor& model,
                           const DataConfig& data, const RunFlags& flags,
                           CommMode mode = CommMode::Simple);

std::string to_json_string(const EpochTiming& t);
std::string epoch_csv_header();
std::string to_csv_row(const EpochTiming& t);

} // namespace stallsim
