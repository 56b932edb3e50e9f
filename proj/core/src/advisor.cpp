#include "stallsim/advisor.hpp"

#include <nlohmann/json.hpp>

#include "stallsim/errors.hpp"
#include "stallsim/scaling.hpp"
#include "stallsim/units.hpp"
#include "text_util.hpp"

namespace stallsim {

using json = nlohmann::ordered_json;

double training_cost(const ClusterConfig& config, double epoch_time, int epochs) {
    if (epoch_time <= 0) throw DomainError("training_cost: epoch_time must be > 0");
    if (epochs < 1) throw DomainError("training_cost: epochs must be >= 1");
    double hourly = 0.0;
    for (const auto& group : config.nodes) {
        hourly += group.spec.price_per_hour * group.count;
    }
    return epochs * epoch_time / units::seconds_per_hour * hourly;
}

namespace {

ClusterConfig homogeneous_config(const InstanceSpec& inst, int count) {
    return count == 1 ? ClusterConfig::single_node(inst, inst.gpu_count)
                      : ClusterConfig::ring(inst, count, inst.gpu_count);
}

double single_node_epoch(const InstanceSpec& inst, const ModelDescriptor& model,
                         const DataConfig& data, CommMode comm) {
    return simulate_epoch(ClusterConfig::single_node(inst, inst.gpu_count), model, data,
                          RunFlags{}, comm)
        .total;
}

ScalingParams scaling_params(const InstanceSpec& inst, const ModelDescriptor& model,
                             double t1) {
    return {t1, inst.network_latency, inst.network_bandwidth,
            static_cast<double>(total_gradient_bytes(model))};
}

double extrapolate(const InstanceSpec& inst, const ModelDescriptor& model,
                   const DataConfig& data, double t1, int count, PredictionMode mode,
                   CommMode comm) {
    if (count == 1) return t1;
    if (mode == PredictionMode::FullSimulation) {
        return simulate_epoch(ClusterConfig::ring(inst, count, inst.gpu_count), model, data,
                              RunFlags{}, comm)
            .total;
    }
    return scaling_time(scaling_params(inst, model, t1), count);
}

} // namespace

double predict_epoch_time(const InstanceSpec& inst, int count, const ModelDescriptor& model,
                          const DataConfig& data, PredictionMode mode, CommMode comm) {
    if (count < 1) throw DomainError("predict_epoch_time: count must be >= 1");
    const double t1 = single_node_epoch(inst, model, data, comm);
    return extrapolate(inst, model, data, t1, count, mode, comm);
}

Recommendation recommend(const Catalog& catalog, const ModelDescriptor& model,
                         const DataConfig& data, int epochs, double budget_seconds,
                         int n_max, PredictionMode mode) {
    validate(catalog);
    if (epochs < 1) throw DomainError("recommend: epochs must be >= 1");
    if (budget_seconds <= 0) throw DomainError("recommend: budget must be > 0");
    if (n_max < 1) throw DomainError("recommend: n_max must be >= 1");

    struct Candidate {
        std::size_t type_index = 0;
        int count = 0;
        double total_time = 0.0;
        double cost = 0.0;
    };

    bool have_feasible = false;
    Candidate best_feasible;
    Candidate best_overall; // fallback: fastest configuration
    bool have_overall = false;

    const auto better_feasible = [](const Candidate& a, const Candidate& b) {
        if (a.cost != b.cost) return a.cost < b.cost;
        if (a.count != b.count) return a.count < b.count;
        return a.type_index < b.type_index;
    };
    const auto better_overall = [&](const Candidate& a, const Candidate& b) {
        if (a.total_time != b.total_time) return a.total_time < b.total_time;
        return better_feasible(a, b);
    };

    for (std::size_t i = 0; i < catalog.instances.size(); ++i) {
        const InstanceSpec& inst = catalog.instances[i];
        const double t1 = single_node_epoch(inst, model, data, CommMode::Simple);
        for (int count = 1; count <= n_max; ++count) {
            const double epoch_time =
                extrapolate(inst, model, data, t1, count, mode, CommMode::Simple);
            Candidate c;
            c.type_index = i;
            c.count = count;
            c.total_time = epochs * epoch_time;
            c.cost = training_cost(homogeneous_config(inst, count), epoch_time, epochs);
            if (c.total_time < budget_seconds &&
                (!have_feasible || better_feasible(c, best_feasible))) {
                best_feasible = c;
                have_feasible = true;
            }
            if (!have_overall || better_overall(c, best_overall)) {
                best_overall = c;
                have_overall = true;
            }
        }
    }

    const Candidate& chosen = have_feasible ? best_feasible : best_overall;
    Recommendation rec;
    rec.config = homogeneous_config(catalog.instances[chosen.type_index], chosen.count);
    rec.predicted_training_time = chosen.total_time;
    rec.predicted_cost = chosen.cost;
    rec.epochs = epochs;
    rec.feasible = have_feasible;
    rec.candidates_considered =
        static_cast<std::int64_t>(catalog.instances.size()) * n_max;
    return rec;
}

std::vector<SweepRow> sweep(const InstanceSpec& inst, const ModelDescriptor& model,
                            const DataConfig& data, int n_lo, int n_hi, int epochs) {
    if (n_lo < 1 || n_hi < n_lo || n_hi > 64) {
        throw DomainError("sweep: instance range must lie within [1, 64]");
    }
    if (epochs < 1) throw DomainError("sweep: epochs must be >= 1");

    const double t1 = single_node_epoch(inst, model, data, CommMode::Simple);
    const ScalingParams params = scaling_params(inst, model, t1);

    std::vector<SweepRow> rows;
    rows.reserve(static_cast<std::size_t>(n_hi - n_lo + 1));
    for (int n = n_lo; n <= n_hi; ++n) {
        SweepRow row;
        row.n = n;
        row.epoch_time = scaling_time(params, n);
        row.total_time = epochs * row.epoch_time;
        row.network_stall = network_stall_n(params, n);
        row.network_stall_pct = row.network_stall / t1 * 100.0;
        row.cost = training_cost(homogeneous_config(inst, n), row.epoch_time, epochs);
        rows.push_back(row);
    }
    return rows;
}

std::string to_json_string(const Recommendation& r) {
    json doc;
    json config;
    config["instance"] = r.config.nodes.front().spec.name;
    config["count"] = r.config.nodes.front().count;
    config["gpus_per_node_used"] = r.config.gpus_per_node_used;
    config["topology"] = to_string(r.config.topology);
    doc["config"] = config;
    doc["predicted_training_time_s"] = r.predicted_training_time;
    doc["predicted_cost_usd"] = r.predicted_cost;
    doc["epochs"] = r.epochs;
    doc["feasible"] = r.feasible;
    doc["candidates_considered"] = r.candidates_considered;
    return doc.dump(2);
}

std::string sweep_csv_header() {
    return "n,epoch_time_s,total_time_s,network_stall_s,network_stall_pct,cost_usd";
}

std::string to_csv_row(const SweepRow& row) {
    using detail::format_double;
    return std::to_string(row.n) + "," + format_double(row.epoch_time) + "," +
           format_double(row.total_time) + "," + format_double(row.network_stall) + "," +
           format_double(row.network_stall_pct) + "," + format_double(row.cost);
}

} // namespace stallsim
