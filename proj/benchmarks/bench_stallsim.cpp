#include <benchmark/benchmark.h>

#include "stallsim/advisor.hpp"
#include "stallsim/scaling.hpp"
#include "stallsim/simulate.hpp"
#include "stallsim/stash.hpp"

namespace {

using namespace stallsim;

InstanceSpec p3_like() {
    InstanceSpec spec;
    spec.name = "p3.16xlarge";
    spec.gpu_count = 8;
    spec.vcpus = 64;
    spec.gpu_memory = 128e9;
    spec.main_memory = 488e9;
    spec.interconnect = {InterconnectKind::Crossbar, 12.5e9, 2e-6, 1.0};
    spec.network_bandwidth = 3.125e9;
    spec.network_latency = 5e-5;
    spec.disk_throughput = 2.5e8;
    spec.cpu_prep_throughput = 4000.0;
    spec.price_per_hour = 24.48;
    return spec;
}

void BM_SimulateEpoch(benchmark::State& state) {
    const InstanceSpec inst = p3_like();
    const ModelDescriptor model = preset("resnet50");
    const ClusterConfig cluster = ClusterConfig::single_node(inst, 8);
    const DataConfig data{static_cast<std::int64_t>(state.range(0)), 32, 0.5};
    for (auto _ : state) {
        benchmark::DoNotOptimize(simulate_epoch(cluster, model, data, RunFlags{}));
    }
}
BENCHMARK(BM_SimulateEpoch)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_ModelCommTime(benchmark::State& state) {
    const ModelDescriptor model = preset("resnet152");
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            model_comm_time(model, 2e-6, 12.5e9, 8, CommMode::Simple));
    }
}
BENCHMARK(BM_ModelCommTime);

void BM_RunStash(benchmark::State& state) {
    const InstanceSpec inst = p3_like();
    const ModelDescriptor model = preset("resnet50");
    const DataConfig data{8192, 32, 0.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_stash(inst, model, data, MultiNodeSplit{2, 4}));
    }
}
BENCHMARK(BM_RunStash);

void BM_Recommend(benchmark::State& state) {
    Catalog catalog;
    for (int i = 0; i < 8; ++i) {
        InstanceSpec spec = p3_like();
        spec.name = "type" + std::to_string(i);
        spec.price_per_hour = 1.0 + i;
        spec.network_bandwidth = 1.25e9 * (1 + i);
        catalog.instances.push_back(spec);
    }
    const ModelDescriptor model = preset("resnet50");
    const DataConfig data{8192, 32, 1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            recommend(catalog, model, data, 10, 1e6, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Recommend)->Arg(4)->Arg(8)->Arg(16);

} // namespace

BENCHMARK_MAIN();
