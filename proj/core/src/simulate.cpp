#include "stallsim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "stallsim/errors.hpp"
#include "text_util.hpp"

namespace stallsim {

using json = nlohmann::ordered_json;

const char* to_string(Topology t) {
    return t == Topology::SingleNode ? "single_node" : "ring";
}

const char* to_string(CommMode m) {
    return m == CommMode::Simple ? "simple" : "ring";
}

CommMode comm_mode_from_string(std::string_view s) {
    if (s == "simple") return CommMode::Simple;
    if (s == "ring") return CommMode::Ring;
    throw DomainError("comm mode must be \"simple\" or \"ring\", got \"" + std::string(s) + "\"");
}

int ClusterConfig::total_instances() const {
    int total = 0;
    for (const auto& group : nodes) total += group.count;
    return total;
}

int ClusterConfig::total_gpus() const {
    return total_instances() * gpus_per_node_used;
}

ClusterConfig ClusterConfig::single_node(InstanceSpec spec, int gpus_used) {
    ClusterConfig config;
    config.nodes.push_back({std::move(spec), 1});
    config.gpus_per_node_used = gpus_used;
    config.topology = Topology::SingleNode;
    return config;
}

ClusterConfig ClusterConfig::ring(InstanceSpec spec, int node_count, int gpus_per_node) {
    ClusterConfig config;
    config.nodes.push_back({std::move(spec), node_count});
    config.gpus_per_node_used = gpus_per_node;
    config.topology = Topology::Ring;
    return config;
}

double allreduce_per_worker_bytes(double gradient_bytes, int workers) {
    if (workers < 1) throw DomainError("allreduce: workers must be >= 1");
    if (gradient_bytes < 0) throw DomainError("allreduce: gradient bytes must be >= 0");
    return 2.0 * (gradient_bytes / workers) * (workers - 1);
}

double layer_comm_time(double gradient_bytes, double tau, double bandwidth,
                       int workers, CommMode mode) {
    if (bandwidth <= 0) throw DomainError("layer_comm_time: bandwidth must be > 0");
    if (workers < 1) throw DomainError("layer_comm_time: workers must be >= 1");
    switch (mode) {
    case CommMode::Simple:
        return tau + gradient_bytes / bandwidth;
    case CommMode::Ring:
        return 2.0 * (workers - 1) * tau +
               allreduce_per_worker_bytes(gradient_bytes, workers) / bandwidth;
    }
    throw DomainError("unreachable comm mode");
}

double model_comm_time(const ModelDescriptor& model, double tau, double bandwidth,
                       int workers, CommMode mode) {
    double total = 0.0;
    for (const auto& layer : model.layers) {
        if (layer.gradient_bytes == 0) continue;
        total += layer_comm_time(static_cast<double>(layer.gradient_bytes), tau, bandwidth,
                                 workers, mode);
    }
    return total;
}

namespace {

void validate_cluster(const ClusterConfig& cluster) {
    if (cluster.nodes.empty()) throw DomainError("cluster: nodes must be non-empty");
    for (const auto& group : cluster.nodes) {
        validate(group.spec);
        if (group.count < 1) throw DomainError("cluster: node counts must be >= 1");
        if (cluster.gpus_per_node_used > group.spec.gpu_count) {
            throw DomainError("cluster: " + group.spec.name + " has " +
                              std::to_string(group.spec.gpu_count) + " GPUs, cannot use " +
                              std::to_string(cluster.gpus_per_node_used));
        }
    }
    if (cluster.gpus_per_node_used < 1) {
        throw DomainError("cluster: gpus_per_node_used must be >= 1");
    }
    if (cluster.total_instances() > 1 && cluster.topology != Topology::Ring) {
        throw DomainError("cluster: multi-instance configurations require the ring topology");
    }
}

void validate_data(const DataConfig& data, int total_gpus) {
    if (data.total_samples < 1) throw DomainError("data: total_samples must be >= 1");
    if (data.per_gpu_batch_size < 1) throw DomainError("data: per_gpu_batch_size must be >= 1");
    if (data.cached_fraction < 0 || data.cached_fraction > 1) {
        throw DomainError("data: cached_fraction must be in [0, 1]");
    }
    const std::int64_t global_batch =
        static_cast<std::int64_t>(data.per_gpu_batch_size) * total_gpus;
    if (global_batch > data.total_samples) {
        throw DomainError("data: per_gpu_batch_size * total GPUs (" +
                          std::to_string(global_batch) + ") exceeds total_samples (" +
                          std::to_string(data.total_samples) + ")");
    }
}

void validate_flags(const RunFlags& flags, const ClusterConfig& cluster) {
    if (flags.single_gpu_baseline && !flags.synthetic_data) {
        throw DomainError("flags: single_gpu_baseline requires synthetic_data");
    }
    if (flags.single_gpu_baseline && cluster.total_gpus() != 1) {
        throw DomainError("flags: single_gpu_baseline requires one node with one GPU in use");
    }
}

struct LinkChoice {
    double bandwidth = 0.0;
    double latency = 0.0;
    bool network_bound = false;
};

// Gradient traffic crosses every link of the reduction path; the slowest one
// sets the pace and takes the attribution.
LinkChoice choose_link(const ClusterConfig& cluster) {
    double ic_bandwidth = std::numeric_limits<double>::infinity();
    double ic_latency = 0.0;
    for (const auto& group : cluster.nodes) {
        ic_bandwidth = std::min(
            ic_bandwidth, effective_per_gpu_bandwidth(group.spec, cluster.gpus_per_node_used));
        ic_latency = std::max(ic_latency, group.spec.interconnect.per_link_latency);
    }
    LinkChoice link{ic_bandwidth, ic_latency, false};
    if (cluster.total_instances() > 1) {
        double net_bandwidth = std::numeric_limits<double>::infinity();
        double net_latency = 0.0;
        for (const auto& group : cluster.nodes) {
            net_bandwidth = std::min(net_bandwidth, group.spec.network_bandwidth);
            net_latency = std::max(net_latency, group.spec.network_latency);
        }
        link.bandwidth = std::min(ic_bandwidth, net_bandwidth);
        link.latency = std::max(ic_latency, net_latency);
        link.network_bound = net_bandwidth <= ic_bandwidth;
    }
    return link;
}

struct IterationCost {
    double compute = 0.0;
    double comm_exposed = 0.0;
    double prep_exposed = 0.0;
    double fetch_exposed = 0.0;
};

} // namespace

EpochTiming simulate_epoch(const ClusterConfig& cluster, const ModelDescriptor& model,
                           const DataConfig& data, const RunFlags& flags, CommMode mode) {
    validate(model);
    validate_cluster(cluster);
    validate_flags(flags, cluster);
    const int total_gpus = cluster.total_gpus();
    validate_data(data, total_gpus);

    const double fwd_per_sample = forward_compute_per_sample(model);
    const double bwd_per_sample = backward_compute_per_sample(model);

    const LinkChoice link = choose_link(cluster);
    const double comm_raw =
        total_gpus > 1 ? model_comm_time(model, link.latency, link.bandwidth, total_gpus, mode)
                       : 0.0;

    const double cached = flags.cold_cache ? 0.0 : data.cached_fraction;

    // The slowest node bounds the data pipeline stages.
    double fetch_per_sample = 0.0; // per per-GPU sample, node level
    double prep_per_sample = 0.0;
    if (!flags.synthetic_data) {
        for (const auto& group : cluster.nodes) {
            const InstanceSpec& spec = group.spec;
            // One data-loading worker per GPU in use; they share the disk.
            const double node_fetch = (1.0 - cached) *
                                      static_cast<double>(model.sample_bytes) *
                                      cluster.gpus_per_node_used / spec.disk_throughput;
            fetch_per_sample = std::max(fetch_per_sample, node_fetch);
            // A worker only runs at full speed with at least one vCPU to itself.
            const double worker_rate =
                spec.cpu_prep_throughput *
                std::min(1.0, static_cast<double>(spec.vcpus) / cluster.gpus_per_node_used);
            prep_per_sample = std::max(prep_per_sample, 1.0 / worker_rate);
        }
    }

    const std::int64_t global_batch =
        static_cast<std::int64_t>(data.per_gpu_batch_size) * total_gpus;
    const std::int64_t iterations = (data.total_samples + global_batch - 1) / global_batch;
    const double full_batch = static_cast<double>(data.per_gpu_batch_size);
    const double last_batch =
        static_cast<double>(data.total_samples - (iterations - 1) * global_batch) / total_gpus;

    const auto iteration_cost = [&](double per_gpu_batch) {
        IterationCost cost;
        cost.compute = per_gpu_batch * (fwd_per_sample + bwd_per_sample);
        // Communication overlaps the backward pass; only the excess shows.
        cost.comm_exposed = std::max(0.0, comm_raw - per_gpu_batch * bwd_per_sample);
        const double gpu_busy = cost.compute + cost.comm_exposed;
        if (!flags.synthetic_data) {
            const double prep_time = per_gpu_batch * prep_per_sample;
            const double fetch_time = per_gpu_batch * fetch_per_sample;
            // Layered exposure: prep is what real cached data adds over the
            // GPU-bound run, fetch is what uncached data adds on top.
            cost.prep_exposed = std::max(0.0, prep_time - gpu_busy);
            cost.fetch_exposed =
                std::max(0.0, fetch_time + prep_time - gpu_busy) - cost.prep_exposed;
        }
        return cost;
    };

    const IterationCost full = iteration_cost(full_batch);
    const IterationCost last = iteration_cost(last_batch);
    const double repeats = static_cast<double>(iterations - 1);

    EpochTiming timing;
    timing.iterations = iterations;
    timing.compute = repeats * full.compute + last.compute;
    const double comm_exposed = repeats * full.comm_exposed + last.comm_exposed;
    if (link.network_bound) {
        timing.comm_network_exposed = comm_exposed;
    } else {
        timing.comm_interconnect_exposed = comm_exposed;
    }
    timing.prep = repeats * full.prep_exposed + last.prep_exposed;
    timing.fetch = repeats * full.fetch_exposed + last.fetch_exposed;
    timing.total = timing.compute + timing.comm_interconnect_exposed +
                   timing.comm_network_exposed + timing.fetch + timing.prep;
    return timing;
}

std::string to_json_string(const EpochTiming& t) {
    json doc;
    doc["total_s"] = t.total;
    doc["fetch_s"] = t.fetch;
    doc["prep_s"] = t.prep;
    doc["compute_s"] = t.compute;
    doc["comm_interconnect_exposed_s"] = t.comm_interconnect_exposed;
    doc["comm_network_exposed_s"] = t.comm_network_exposed;
    doc["iterations"] = t.iterations;
    return doc.dump(2);
}

std::string epoch_csv_header() {
    return "total_s,fetch_s,prep_s,compute_s,comm_interconnect_exposed_s,"
           "comm_network_exposed_s,iterations";
}

std::string to_csv_row(const EpochTiming& t) {
    using detail::format_double;
    return format_double(t.total) + "," + format_double(t.fetch) + "," +
           format_double(t.prep) + "," + format_double(t.compute) + "," +
           format_double(t.comm_interconnect_exposed) + "," +
           format_double(t.comm_network_exposed) + "," + std::to_string(t.iterations);
}

} // namespace stallsim
