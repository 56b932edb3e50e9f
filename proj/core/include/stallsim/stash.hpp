#pragma once

#include <optional>
#include <string>

#include "stallsim/simulate.hpp"

namespace stallsim {

// How the multi-node run splits the profiled instance's GPUs across
// network-connected nodes. node_count * gpus_per_node must equal the
// instance's GPU count so both runs drive the same total GPU work.
struct MultiNodeSplit {
    int node_count = 2;
    int gpus_per_node = 0;

    bool operator==(const MultiNodeSplit&) const = default;
};

struct StashStep {
    ClusterConfig cluster;
    DataConfig data;
    RunFlags flags;
};

// The five profiling runs. Each worker processes the same number of samples
// at the same per-GPU batch size in every step, which is what makes the
// run-to-run differences attributable to a single resource.
struct StashPlan {
    StashStep single_gpu;      // one worker, synthetic data
    StashStep single_instance; // all GPUs, synthetic data
    StashStep cold_cache;      // all GPUs, real data, caches cleared
    StashStep warm_cache;      // all GPUs, real data fully cached
    std::optional<StashStep> multi_node; // GPU-count-matched network split
};

StashPlan plan_stash(const InstanceSpec& inst, const ModelDescriptor& model,
                     const DataConfig& data,
                     std::optional<MultiNodeSplit> split = std::nullopt);

struct StallReport {
    std::string instance;
    std::string model;
    int per_gpu_batch = 0;

    double single_gpu_time = 0.0;      // T1
    double single_instance_time = 0.0; // T2
    double cold_cache_time = 0.0;      // T3
    double warm_cache_time = 0.0;      // T4
    std::optional<double> multi_node_time; // T5, absent without a network run

    double interconnect_stall = 0.0; // T2 - T1
    double prep_stall = 0.0;         // T4 - T2
    double fetch_stall = 0.0;        // T3 - T4
    std::optional<double> network_stall; // T5 - T2

    // Denominators differ on purpose: interconnect stall is relative to the
    // single-GPU time, network stall to the single-instance time.
    double interconnect_stall_pct = 0.0;
    std::optional<double> network_stall_pct;

    double epoch_cost = 0.0; // USD, warm-cache epoch on the profiled instance
};

// Applies the differencing identities to the five epoch timings. Under the
// simulator's additive decomposition the stall differences reduce to single
// timing components, so they are taken from those components directly and
// are exact.
StallReport derive_report(const InstanceSpec& inst, const ModelDescriptor& model,
                          int per_gpu_batch, const EpochTiming& single_gpu,
                          const EpochTiming& single_instance, const EpochTiming& cold,
                          const EpochTiming& warm,
                          const std::optional<EpochTiming>& multi_node);

StallReport run_stash(const InstanceSpec& inst, const ModelDescriptor& model,
                      const DataConfig& data,
                      std::optional<MultiNodeSplit> split = std::nullopt,
                      CommMode mode = CommMode::Simple);

std::string to_json_string(const StallReport& r);
std::string stall_csv_header();
std::string to_csv_row(const StallReport& r);

} // namespace stallsim
