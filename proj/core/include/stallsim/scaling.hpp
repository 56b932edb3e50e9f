#pragma once

#include <string_view>

#include "stallsim/model.hpp"

namespace stallsim {

// Inputs of the idealized instance-scaling model.
struct ScalingParams {
    double t1 = 0.0;             // seconds, single-instance epoch time
    double tau = 0.0;            // seconds, average pairwise inter-instance latency
    double bandwidth = 0.0;      // bytes/second, inter-instance link
    double gradient_bytes = 0.0; // bytes synchronized per worker and iteration

    bool operator==(const ScalingParams&) const = default;
};

// Epoch network overhead of an n-instance ring:
// (tau + 2G/(n*B)) * (n - 1).
double network_stall_n(const ScalingParams& p, int instances);

// Predicted epoch time at n instances: t1/n + network_stall_n(n).
double scaling_time(const ScalingParams& p, int instances);

// Discrete argmin of scaling_time over [1, n_max], ties toward fewer
// instances. tau = 0 makes the objective strictly decreasing in the
// compute-dominated regime, so that degenerate case returns n_max.
int optimal_instance_count(const ScalingParams& p, int n_max);

enum class Regime { LatencyDominated, BandwidthDominated, Mixed };

const char* to_string(Regime r);

// Compares the per-layer transfer time G/(L*B) against tau. The factor-10
// thresholds are tunable calibration constants.
inline constexpr double regime_threshold_factor = 10.0;

Regime classify_regime(const ModelDescriptor& model, double tau, double bandwidth);

} // namespace stallsim
