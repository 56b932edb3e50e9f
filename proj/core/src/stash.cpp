#include "stallsim/stash.hpp"

#include <nlohmann/json.hpp>

#include "stallsim/errors.hpp"
#include "stallsim/units.hpp"
#include "text_util.hpp"

namespace stallsim {

using json = nlohmann::ordered_json;

StashPlan plan_stash(const InstanceSpec& inst, const ModelDescriptor& model,
                     const DataConfig& data, std::optional<MultiNodeSplit> split) {
    validate(inst);
    validate(model);
    const int gpus = inst.gpu_count;
    if (data.total_samples % gpus != 0) {
        throw ConfigError("stash: total_samples (" + std::to_string(data.total_samples) +
                          ") must divide evenly across " + std::to_string(gpus) +
                          " GPUs so every run drives the same per-GPU sample count");
    }
    const std::int64_t per_gpu_samples = data.total_samples / gpus;

    StashPlan plan;

    // One worker, its own data shard, nothing to synchronize.
    plan.single_gpu.cluster = ClusterConfig::single_node(inst, 1);
    plan.single_gpu.data = {per_gpu_samples, data.per_gpu_batch_size, 0.0};
    plan.single_gpu.flags = {true, true, false};

    plan.single_instance.cluster = ClusterConfig::single_node(inst, gpus);
    plan.single_instance.data = {data.total_samples, data.per_gpu_batch_size, 0.0};
    plan.single_instance.flags = {true, false, false};

    plan.cold_cache.cluster = ClusterConfig::single_node(inst, gpus);
    plan.cold_cache.data = {data.total_samples, data.per_gpu_batch_size, 0.0};
    plan.cold_cache.flags = {false, false, true};

    plan.warm_cache.cluster = ClusterConfig::single_node(inst, gpus);
    plan.warm_cache.data = {data.total_samples, data.per_gpu_batch_size, 1.0};
    plan.warm_cache.flags = {false, false, false};

    if (split) {
        MultiNodeSplit s = *split;
        if (s.gpus_per_node == 0 && s.node_count > 0) {
            s.gpus_per_node = gpus / s.node_count;
        }
        if (s.node_count < 2) {
            throw ConfigError("stash: multi-node split needs at least two nodes");
        }
        if (s.node_count * s.gpus_per_node != gpus) {
            throw ConfigError("stash: multi-node split " + std::to_string(s.node_count) + "x" +
                              std::to_string(s.gpus_per_node) + " does not total " +
                              std::to_string(gpus) + " GPUs");
        }
        StashStep step;
        step.cluster = ClusterConfig::ring(inst, s.node_count, s.gpus_per_node);
        step.data = {data.total_samples, data.per_gpu_batch_size, 0.0};
        step.flags = {true, false, false};
        plan.multi_node = step;
    }
    return plan;
}

StallReport derive_report(const InstanceSpec& inst, const ModelDescriptor& model,
                          int per_gpu_batch, const EpochTiming& single_gpu,
                          const EpochTiming& single_instance, const EpochTiming& cold,
                          const EpochTiming& warm,
                          const std::optional<EpochTiming>& multi_node) {
    if (single_gpu.total <= 0) {
        throw DomainError("stash: single-GPU time must be positive");
    }

    StallReport report;
    report.instance = inst.name;
    report.model = model.name;
    report.per_gpu_batch = per_gpu_batch;
    report.single_gpu_time = single_gpu.total;
    report.single_instance_time = single_instance.total;
    report.cold_cache_time = cold.total;
    report.warm_cache_time = warm.total;

    // Under the additive stage decomposition each run-to-run difference
    // collapses onto one timing component, so the stalls are read off those
    // components; the totals differ by exactly these amounts.
    report.interconnect_stall = single_instance.comm_interconnect_exposed;
    report.prep_stall = warm.prep;
    report.fetch_stall = cold.fetch - warm.fetch;

    report.interconnect_stall_pct = report.interconnect_stall / report.single_gpu_time * 100.0;

    if (multi_node) {
        report.multi_node_time = multi_node->total;
        report.network_stall = multi_node->total - single_instance.total;
        report.network_stall_pct = *report.network_stall / report.single_instance_time * 100.0;
    }

    report.epoch_cost = inst.price_per_hour * warm.total / units::seconds_per_hour;
    return report;
}

StallReport run_stash(const InstanceSpec& inst, const ModelDescriptor& model,
                      const DataConfig& data, std::optional<MultiNodeSplit> split,
                      CommMode mode) {
    const StashPlan plan = plan_stash(inst, model, data, split);
    const auto run = [&](const StashStep& step) {
        return simulate_epoch(step.cluster, model, step.data, step.flags, mode);
    };
    const EpochTiming t1 = run(plan.single_gpu);
    const EpochTiming t2 = run(plan.single_instance);
    const EpochTiming t3 = run(plan.cold_cache);
    const EpochTiming t4 = run(plan.warm_cache);
    std::optional<EpochTiming> t5;
    if (plan.multi_node) t5 = run(*plan.multi_node);
    return derive_report(inst, model, data.per_gpu_batch_size, t1, t2, t3, t4, t5);
}

std::string to_json_string(const StallReport& r) {
    json doc;
    doc["instance"] = r.instance;
    doc["model"] = r.model;
    doc["per_gpu_batch"] = r.per_gpu_batch;
    doc["single_gpu_time_s"] = r.single_gpu_time;
    doc["single_instance_time_s"] = r.single_instance_time;
    doc["cold_cache_time_s"] = r.cold_cache_time;
    doc["warm_cache_time_s"] = r.warm_cache_time;
    doc["multi_node_time_s"] = r.multi_node_time ? json(*r.multi_node_time) : json(nullptr);
    doc["interconnect_stall_s"] = r.interconnect_stall;
    doc["network_stall_s"] = r.network_stall ? json(*r.network_stall) : json(nullptr);
    doc["prep_stall_s"] = r.prep_stall;
    doc["fetch_stall_s"] = r.fetch_stall;
    doc["interconnect_stall_pct"] = r.interconnect_stall_pct;
    doc["network_stall_pct"] = r.network_stall_pct ? json(*r.network_stall_pct) : json(nullptr);
    doc["epoch_cost_usd"] = r.epoch_cost;
    return doc.dump(2);
}

std::string stall_csv_header() {
    return "instance,model,batch,t1,t2,t3,t4,t5,ic_stall_s,nw_stall_s,prep_s,fetch_s,"
           "ic_pct,nw_pct,cost_usd";
}

std::string to_csv_row(const StallReport& r) {
    using detail::format_double;
    const auto opt = [](const std::optional<double>& v) {
        return v ? detail::format_double(*v) : std::string();
    };
    return r.instance + "," + r.model + "," + std::to_string(r.per_gpu_batch) + "," +
           format_double(r.single_gpu_time) + "," + format_double(r.single_instance_time) +
           "," + format_double(r.cold_cache_time) + "," + format_double(r.warm_cache_time) +
           "," + opt(r.multi_node_time) + "," + format_double(r.interconnect_stall) + "," +
           opt(r.network_stall) + "," + format_double(r.prep_stall) + "," +
           format_double(r.fetch_stall) + "," + format_double(r.interconnect_stall_pct) + "," +
           opt(r.network_stall_pct) + "," + format_double(r.epoch_cost);
}

} // namespace stallsim
