#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stallsim/catalog.hpp"
#include "stallsim/model.hpp"
#include "stallsim/simulate.hpp"

namespace stallsim {

// Multi-instance predictions extrapolate from a single-node simulation via
// the scaling model; FullSimulation runs the multi-node simulator instead,
// for cross-checks.
enum class PredictionMode { Analytic, FullSimulation };

struct Recommendation {
    ClusterConfig config;
    double predicted_training_time = 0.0; // seconds, all epochs
    double predicted_cost = 0.0;          // USD
    int epochs = 1;
    bool feasible = false;
    std::int64_t candidates_considered = 0;
};

// epochs * epoch_time / 3600 * sum(price * count); per-second billing.
double training_cost(const ClusterConfig& config, double epoch_time, int epochs);

// Predicted epoch time for `count` instances of `inst`. count == 1 simulates
// the node directly; count > 1 feeds the single-node time, the model's
// gradient bytes and the instance's network figures to the scaling model
// (or simulates the ring when mode is FullSimulation).
double predict_epoch_time(const InstanceSpec& inst, int count, const ModelDescriptor& model,
                          const DataConfig& data,
                          PredictionMode mode = PredictionMode::Analytic,
                          CommMode comm = CommMode::Simple);

// Cheapest homogeneous (type, count <= n_max) configuration whose predicted
// training time beats the budget; the fastest configuration with
// feasible = false when none does. Ties break toward lower cost, then fewer
// instances, then catalog order.
Recommendation recommend(const Catalog& catalog, const ModelDescriptor& model,
                         const DataConfig& data, int epochs, double budget_seconds,
                         int n_max, PredictionMode mode = PredictionMode::Analytic);

struct SweepRow {
    int n = 0;
    double epoch_time = 0.0;        // seconds
    double total_time = 0.0;        // seconds, epochs * epoch_time
    double network_stall = 0.0;     // seconds per epoch
    double network_stall_pct = 0.0; // relative to the single-instance epoch
    double cost = 0.0;              // USD

    bool operator==(const SweepRow&) const = default;
};

std::vector<SweepRow> sweep(const InstanceSpec& inst, const ModelDescriptor& model,
                            const DataConfig& data, int n_lo, int n_hi, int epochs = 1);

std::string to_json_string(const Recommendation& r);
std::string sweep_csv_header();
std::string to_csv_row(const SweepRow& row);

} // namespace stallsim
