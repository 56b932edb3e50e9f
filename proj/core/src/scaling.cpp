#include "stallsim/scaling.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "stallsim/errors.hpp"

namespace stallsim {

namespace {

void validate(const ScalingParams& p) {
    if (p.t1 <= 0) throw DomainError("scaling: t1 must be > 0");
    if (p.tau < 0) throw DomainError("scaling: tau must be >= 0");
    if (p.bandwidth <= 0) throw DomainError("scaling: bandwidth must be > 0");
    if (p.gradient_bytes < 0) throw DomainError("scaling: gradient_bytes must be >= 0");
}

} // namespace

double network_stall_n(const ScalingParams& p, int instances) {
    validate(p);
    if (instances < 1) throw DomainError("scaling: instances must be >= 1");
    return (p.tau + 2.0 * p.gradient_bytes / (instances * p.bandwidth)) * (instances - 1);
}

double scaling_time(const ScalingParams& p, int instances) {
    return p.t1 / instances + network_stall_n(p, instances);
}

int optimal_instance_count(const ScalingParams& p, int n_max) {
    validate(p);
    if (n_max < 1) throw DomainError("scaling: n_max must be >= 1");
    if (p.tau == 0.0) {
        // Zero latency makes the objective strictly decreasing whenever
        // compute dominates; the model presumes tau > 0.
        return n_max;
    }

    const auto clamp = [n_max](double n) {
        return static_cast<int>(std::clamp(n, 1.0, static_cast<double>(n_max)));
    };

    // The continuous optimum sits at sqrt((t1 - 2G/B)/tau); the bandwidth
    // term shifts it below the latency-only sqrt(t1/tau), so both pairs of
    // rounded candidates are tried. The endpoints cover the cases where the
    // objective is monotone or concave over the feasible range.
    const double latency_only = std::sqrt(p.t1 / p.tau);
    const double corrected =
        std::sqrt(std::max(0.0, p.t1 - 2.0 * p.gradient_bytes / p.bandwidth) / p.tau);
    const std::array<int, 6> candidates = {
        1,
        n_max,
        clamp(std::floor(latency_only)),
        clamp(std::ceil(latency_only)),
        clamp(std::floor(corrected)),
        clamp(std::ceil(corrected)),
    };

    int best_n = 0;
    double best_time = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        if (std::find(candidates.begin(), candidates.end(), n) == candidates.end()) continue;
        const double time = scaling_time(p, n);
        if (best_n == 0 || time < best_time) { // ties keep the smaller, cheaper n
            best_n = n;
            best_time = time;
        }
    }
    return best_n;
}

const char* to_string(Regime r) {
    switch (r) {
    case Regime::LatencyDominated: return "latency_dominated";
    case Regime::BandwidthDominated: return "bandwidth_dominated";
    case Regime::Mixed: return "mixed";
    }
    return "unknown";
}

Regime classify_regime(const ModelDescriptor& model, double tau, double bandwidth) {
    if (bandwidth <= 0) throw DomainError("classify_regime: bandwidth must be > 0");
    if (tau < 0) throw DomainError("classify_regime: tau must be >= 0");
    const double gradient_bytes = static_cast<double>(total_gradient_bytes(model));
    if (gradient_bytes == 0.0) return Regime::LatencyDominated;
    const int layers = sync_layer_count(model);
    const double per_layer_transfer = gradient_bytes / (layers * bandwidth);
    if (per_layer_transfer < tau / regime_threshold_factor) return Regime::LatencyDominated;
    if (per_layer_transfer > tau * regime_threshold_factor) return Regime::BandwidthDominated;
    return Regime::Mixed;
}

} // namespace stallsim
