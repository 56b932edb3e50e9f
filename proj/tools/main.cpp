#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "stallsim/advisor.hpp"
#include "stallsim/catalog.hpp"
#include "stallsim/errors.hpp"
#include "stallsim/model.hpp"
#include "stallsim/scaling.hpp"
#include "stallsim/simulate.hpp"
#include "stallsim/stash.hpp"

namespace {

using namespace stallsim;

// Configuration rejected for resource reasons rather than bad input.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Format { Json, Csv, Pretty };

struct GlobalOptions {
    std::string catalog_path;
    std::string format; // empty: pretty on terminals, json when piped
};

Format resolve_format(const GlobalOptions& g) {
    if (g.format == "json") return Format::Json;
    if (g.format == "csv") return Format::Csv;
    if (g.format == "pretty") return Format::Pretty;
    return isatty(fileno(stdout)) ? Format::Pretty : Format::Json;
}

std::string default_catalog_path(const GlobalOptions& g) {
    if (!g.catalog_path.empty()) return g.catalog_path;
    if (const char* env = std::getenv("STALLSIM_CATALOG"); env && *env) return env;
    return "catalog/aws_p.json";
}

Catalog open_catalog(const GlobalOptions& g) {
    return load_catalog(default_catalog_path(g));
}

// Six significant digits for human-facing tables.
std::string pretty_num(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return std::string(buf, res.ptr);
}

// Shortest round-trip form for machine output.
std::string json_num(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void print_kv(const std::string& key, const std::string& value) {
    std::printf("%-28s %s\n", key.c_str(), value.c_str());
}

std::int64_t default_samples(int batch, int gpus) {
    // 32 iterations per epoch unless the caller says otherwise.
    return static_cast<std::int64_t>(batch) * gpus * 32;
}

MultiNodeSplit parse_split(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos) {
        throw DomainError("--multi-node expects NODESxGPUS, e.g. 2x4, got \"" + text + "\"");
    }
    MultiNodeSplit split;
    try {
        split.node_count = std::stoi(text.substr(0, x));
        split.gpus_per_node = std::stoi(text.substr(x + 1));
    } catch (const std::exception&) {
        throw DomainError("--multi-node expects NODESxGPUS, e.g. 2x4, got \"" + text + "\"");
    }
    return split;
}

std::pair<int, int> parse_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const int n = std::stoi(text);
            return {1, n};
        }
        return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
    } catch (const std::exception&) {
        throw DomainError("--n expects LO..HI or HI, got \"" + text + "\"");
    }
}

int cmd_catalog_validate(const GlobalOptions& g, const std::string& path_arg) {
    const std::string path = path_arg.empty() ? default_catalog_path(g) : path_arg;
    const Catalog catalog = load_catalog(path);
    std::printf("catalog OK: %zu instance types\n", catalog.instances.size());
    return 0;
}

int cmd_presets_list(const GlobalOptions& g) {
    const auto infos = preset_infos();
    switch (resolve_format(g)) {
    case Format::Json: {
        std::string out = "[\n";
        for (std::size_t i = 0; i < infos.size(); ++i) {
            const auto& p = infos[i];
            out += "  {\"name\": \"" + p.name +
                   "\", \"parameters\": " + std::to_string(p.parameters) +
                   ", \"layers\": " + std::to_string(p.layer_count) +
                   ", \"sample_bytes\": " + std::to_string(p.sample_bytes) + "}";
            out += i + 1 < infos.size() ? ",\n" : "\n";
        }
        out += "]";
        std::printf("%s\n", out.c_str());
        break;
    }
    case Format::Csv:
        std::printf("name,parameters,layers,sample_bytes\n");
        for (const auto& p : infos) {
            std::printf("%s,%llu,%d,%llu\n", p.name.c_str(),
                        static_cast<unsigned long long>(p.parameters), p.layer_count,
                        static_cast<unsigned long long>(p.sample_bytes));
        }
        break;
    case Format::Pretty:
        std::printf("%-14s %14s %8s %14s\n", "name", "parameters", "layers", "sample_bytes");
        for (const auto& p : infos) {
            std::printf("%-14s %14llu %8d %14llu\n", p.name.c_str(),
                        static_cast<unsigned long long>(p.parameters), p.layer_count,
                        static_cast<unsigned long long>(p.sample_bytes));
        }
        break;
    }
    return 0;
}

struct SimulateArgs {
    std::string model;
    std::string instance;
    int batch = 32;
    std::int64_t samples = 0;
    int nodes = 1;
    int gpus_per_node = 0; // 0: all of the instance's GPUs
    double cached = 0.0;
    bool synthetic = false;
    std::string mode = "simple";
};

int cmd_simulate(const GlobalOptions& g, const SimulateArgs& args) {
    const Catalog catalog = open_catalog(g);
    const InstanceSpec& inst = catalog.at(args.instance);
    const ModelDescriptor model = resolve_model(args.model);

    const int gpus = args.gpus_per_node > 0 ? args.gpus_per_node : inst.gpu_count;
    ClusterConfig cluster = args.nodes > 1 ? ClusterConfig::ring(inst, args.nodes, gpus)
                                           : ClusterConfig::single_node(inst, gpus);
    DataConfig data;
    data.per_gpu_batch_size = args.batch;
    data.total_samples =
        args.samples > 0 ? args.samples : default_samples(args.batch, cluster.total_gpus());
    data.cached_fraction = args.cached;
    RunFlags flags;
    flags.synthetic_data = args.synthetic;

    const EpochTiming timing =
        simulate_epoch(cluster, model, data, flags, comm_mode_from_string(args.mode));

    switch (resolve_format(g)) {
    case Format::Json:
        std::printf("%s\n", to_json_string(timing).c_str());
        break;
    case Format::Csv:
        std::printf("%s\n%s\n", epoch_csv_header().c_str(), to_csv_row(timing).c_str());
        break;
    case Format::Pretty:
        print_kv("total_s", pretty_num(timing.total));
        print_kv("fetch_s", pretty_num(timing.fetch));
        print_kv("prep_s", pretty_num(timing.prep));
        print_kv("compute_s", pretty_num(timing.compute));
        print_kv("comm_interconnect_exposed_s", pretty_num(timing.comm_interconnect_exposed));
        print_kv("comm_network_exposed_s", pretty_num(timing.comm_network_exposed));
        print_kv("iterations", std::to_string(timing.iterations));
        break;
    }
    return 0;
}

struct StashArgs {
    std::string instance;
    std::string model;
    int batch = 32;
    std::int64_t samples = 0;
    std::string multi_node;
    std::string mode = "simple";
};

int cmd_stash(const GlobalOptions& g, const StashArgs& args) {
    const Catalog catalog = open_catalog(g);
    const InstanceSpec& inst = catalog.at(args.instance);
    const ModelDescriptor model = resolve_model(args.model);

    // Coarse memory feasibility: one replica's gradients, weights, optimizer
    // state (4x the gradient bytes) plus the resident batch must fit a GPU.
    const double per_gpu_memory = inst.gpu_memory / inst.gpu_count;
    const double required = 4.0 * static_cast<double>(total_gradient_bytes(model)) +
                            static_cast<double>(args.batch) *
                                static_cast<double>(model.sample_bytes);
    if (required > per_gpu_memory) {
        throw InfeasibleError("batch " + std::to_string(args.batch) + " needs ~" +
                              pretty_num(required / 1e9) + " GB per GPU but " + inst.name +
                              " offers " + pretty_num(per_gpu_memory / 1e9) + " GB");
    }

    DataConfig data;
    data.per_gpu_batch_size = args.batch;
    data.total_samples =
        args.samples > 0 ? args.samples : default_samples(args.batch, inst.gpu_count);

    std::optional<MultiNodeSplit> split;
    if (!args.multi_node.empty()) split = parse_split(args.multi_node);

    const StallReport report =
        run_stash(inst, model, data, split, comm_mode_from_string(args.mode));

    switch (resolve_format(g)) {
    case Format::Json:
        std::printf("%s\n", to_json_string(report).c_str());
        break;
    case Format::Csv:
        std::printf("%s\n%s\n", stall_csv_header().c_str(), to_csv_row(report).c_str());
        break;
    case Format::Pretty: {
        const auto opt = [](const std::optional<double>& v) {
            return v ? pretty_num(*v) : std::string("-");
        };
        print_kv("instance", report.instance);
        print_kv("model", report.model);
        print_kv("per_gpu_batch", std::to_string(report.per_gpu_batch));
        print_kv("single_gpu_time_s", pretty_num(report.single_gpu_time));
        print_kv("single_instance_time_s", pretty_num(report.single_instance_time));
        print_kv("cold_cache_time_s", pretty_num(report.cold_cache_time));
        print_kv("warm_cache_time_s", pretty_num(report.warm_cache_time));
        print_kv("multi_node_time_s", opt(report.multi_node_time));
        print_kv("interconnect_stall_s", pretty_num(report.interconnect_stall));
        print_kv("network_stall_s", opt(report.network_stall));
        print_kv("prep_stall_s", pretty_num(report.prep_stall));
        print_kv("fetch_stall_s", pretty_num(report.fetch_stall));
        print_kv("interconnect_stall_pct", pretty_num(report.interconnect_stall_pct));
        print_kv("network_stall_pct", opt(report.network_stall_pct));
        print_kv("epoch_cost_usd", pretty_num(report.epoch_cost));
        break;
    }
    }
    return 0;
}

struct ScaleArgs {
    std::string model;
    std::string instance;
    std::string range = "1..8";
    int batch = 32;
    std::int64_t samples = 0;
    int epochs = 1;
};

int cmd_scale(const GlobalOptions& g, const ScaleArgs& args) {
    const Catalog catalog = open_catalog(g);
    const InstanceSpec& inst = catalog.at(args.instance);
    const ModelDescriptor model = resolve_model(args.model);
    const auto [lo, hi] = parse_range(args.range);

    if (inst.network_latency == 0) {
        std::fprintf(stderr,
                     "warning: %s has zero network latency; scaling has no optimum\n",
                     inst.name.c_str());
    }

    DataConfig data;
    data.per_gpu_batch_size = args.batch;
    data.total_samples =
        args.samples > 0 ? args.samples : default_samples(args.batch, inst.gpu_count);
    data.cached_fraction = 1.0;

    const std::vector<SweepRow> rows = sweep(inst, model, data, lo, hi, args.epochs);
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].total_time < rows[best].total_time) best = i;
    }

    switch (resolve_format(g)) {
    case Format::Json: {
        std::string out = "[\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const SweepRow& r = rows[i];
            out += "  {\"n\": " + std::to_string(r.n) +
                   ", \"epoch_time_s\": " + json_num(r.epoch_time) +
                   ", \"total_time_s\": " + json_num(r.total_time) +
                   ", \"network_stall_s\": " + json_num(r.network_stall) +
                   ", \"network_stall_pct\": " + json_num(r.network_stall_pct) +
                   ", \"cost_usd\": " + json_num(r.cost) + "}";
            out += i + 1 < rows.size() ? ",\n" : "\n";
        }
        out += "]";
        std::printf("%s\n", out.c_str());
        break;
    }
    case Format::Csv:
        std::printf("%s\n", sweep_csv_header().c_str());
        for (const SweepRow& r : rows) std::printf("%s\n", to_csv_row(r).c_str());
        break;
    case Format::Pretty:
        std::printf("%2s %4s %14s %14s %16s %10s %12s\n", "", "n", "epoch_time_s",
                    "total_time_s", "network_stall_s", "stall_pct", "cost_usd");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const SweepRow& r = rows[i];
            std::printf("%2s %4d %14s %14s %16s %10s %12s\n", i == best ? "*" : "", r.n,
                        pretty_num(r.epoch_time).c_str(), pretty_num(r.total_time).c_str(),
                        pretty_num(r.network_stall).c_str(),
                        pretty_num(r.network_stall_pct).c_str(), pretty_num(r.cost).c_str());
        }
        break;
    }
    return 0;
}

struct RecommendArgs {
    std::string model;
    double budget = 0.0;
    int epochs = 1;
    int n_max = 8;
    int batch = 32;
    std::int64_t samples = 0;
    double cached = 1.0;
    bool full_sim = false;
};

int cmd_recommend(const GlobalOptions& g, const RecommendArgs& args) {
    const Catalog catalog = open_catalog(g);
    const ModelDescriptor model = resolve_model(args.model);

    int max_gpus = 1;
    for (const auto& inst : catalog.instances) max_gpus = std::max(max_gpus, inst.gpu_count);

    DataConfig data;
    data.per_gpu_batch_size = args.batch;
    data.total_samples =
        args.samples > 0 ? args.samples : default_samples(args.batch, max_gpus);
    data.cached_fraction = args.cached;

    const Recommendation rec =
        recommend(catalog, model, data, args.epochs, args.budget, args.n_max,
                  args.full_sim ? PredictionMode::FullSimulation : PredictionMode::Analytic);
    if (!rec.feasible) {
        std::fprintf(stderr, "warning: no configuration meets the %s s budget; "
                             "reporting the fastest one\n",
                     pretty_num(args.budget).c_str());
    }

    switch (resolve_format(g)) {
    case Format::Json:
        std::printf("%s\n", to_json_string(rec).c_str());
        break;
    case Format::Csv:
        std::printf("instance,count,predicted_training_time_s,predicted_cost_usd,epochs,"
                    "feasible,candidates_considered\n");
        std::printf("%s,%d,%s,%s,%d,%s,%lld\n", rec.config.nodes.front().spec.name.c_str(),
                    rec.config.nodes.front().count, pretty_num(rec.predicted_training_time).c_str(),
                    pretty_num(rec.predicted_cost).c_str(), rec.epochs,
                    rec.feasible ? "true" : "false",
                    static_cast<long long>(rec.candidates_considered));
        break;
    case Format::Pretty:
        print_kv("instance", rec.config.nodes.front().spec.name);
        print_kv("count", std::to_string(rec.config.nodes.front().count));
        print_kv("topology", to_string(rec.config.topology));
        print_kv("predicted_training_time_s", pretty_num(rec.predicted_training_time));
        print_kv("predicted_cost_usd", pretty_num(rec.predicted_cost));
        print_kv("epochs", std::to_string(rec.epochs));
        print_kv("feasible", rec.feasible ? "true" : "false");
        print_kv("candidates_considered", std::to_string(rec.candidates_considered));
        break;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic stall simulator and cost advisor for data-parallel "
                 "training on cloud GPU instances"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalOptions global;
    app.add_option("--catalog", global.catalog_path,
                   "Instance catalog JSON (default: $STALLSIM_CATALOG or catalog/aws_p.json)");
    app.add_option("--format", global.format, "Output format: json, csv or pretty")
        ->check(CLI::IsMember({"json", "csv", "pretty"}));

    auto* catalog_cmd = app.add_subcommand("catalog", "Catalog utilities");
    catalog_cmd->require_subcommand(1);
    std::string validate_path;
    auto* validate_cmd = catalog_cmd->add_subcommand("validate", "Validate a catalog file");
    validate_cmd->add_option("path", validate_path, "Catalog file (default: active catalog)");

    auto* presets_cmd = app.add_subcommand("presets", "Model preset utilities");
    presets_cmd->require_subcommand(1);
    auto* presets_list_cmd = presets_cmd->add_subcommand("list", "List built-in model presets");

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one training epoch");
    simulate_cmd->add_option("model", sim.model, "Preset name or model file")->required();
    simulate_cmd->add_option("instance", sim.instance, "Instance type")->required();
    simulate_cmd->add_option("--batch", sim.batch, "Per-GPU mini-batch size");
    simulate_cmd->add_option("--samples", sim.samples,
                             "Samples per epoch (default: batch * GPUs * 32)");
    simulate_cmd->add_option("--nodes", sim.nodes, "Instance count (>1 forms a ring)");
    simulate_cmd->add_option("--gpus", sim.gpus_per_node, "GPUs used per node (default: all)");
    simulate_cmd->add_option("--cached", sim.cached, "Fraction of the dataset in DRAM");
    simulate_cmd->add_flag("--synthetic", sim.synthetic, "Data pre-populated in GPU memory");
    simulate_cmd->add_option("--mode", sim.mode, "Communication model: simple or ring")
        ->check(CLI::IsMember({"simple", "ring"}));

    StashArgs stash;
    auto* stash_cmd = app.add_subcommand("stash", "Profile the four stalls of an instance");
    stash_cmd->add_option("instance", stash.instance, "Instance type")->required();
    stash_cmd->add_option("model", stash.model, "Preset name or model file")->required();
    stash_cmd->add_option("--batch", stash.batch, "Per-GPU mini-batch size");
    stash_cmd->add_option("--samples", stash.samples,
                          "Samples per epoch (default: batch * GPUs * 32)");
    stash_cmd->add_option("--multi-node", stash.multi_node,
                          "Add the network run as NODESxGPUS, e.g. 2x4");
    stash_cmd->add_option("--mode", stash.mode, "Communication model: simple or ring")
        ->check(CLI::IsMember({"simple", "ring"}));

    ScaleArgs scale;
    auto* scale_cmd = app.add_subcommand("scale", "Sweep predicted time over instance counts");
    scale_cmd->add_option("model", scale.model, "Preset name or model file")->required();
    scale_cmd->add_option("instance", scale.instance, "Instance type")->required();
    scale_cmd->add_option("--n", scale.range, "Instance count range LO..HI");
    scale_cmd->add_option("--batch", scale.batch, "Per-GPU mini-batch size");
    scale_cmd->add_option("--samples", scale.samples,
                          "Samples per epoch (default: batch * GPUs * 32)");
    scale_cmd->add_option("--epochs", scale.epochs, "Training epochs");

    RecommendArgs rec;
    auto* recommend_cmd =
        app.add_subcommand("recommend", "Cheapest configuration within a time budget");
    recommend_cmd->add_option("model", rec.model, "Preset name or model file")->required();
    recommend_cmd->add_option("--budget", rec.budget, "Training time budget in seconds")
        ->required();
    recommend_cmd->add_option("--epochs", rec.epochs, "Training epochs");
    recommend_cmd->add_option("--n-max", rec.n_max, "Largest instance count to consider");
    recommend_cmd->add_option("--batch", rec.batch, "Per-GPU mini-batch size");
    recommend_cmd->add_option("--samples", rec.samples,
                              "Samples per epoch (default: batch * max GPUs * 32)");
    recommend_cmd->add_option("--cached", rec.cached, "Fraction of the dataset in DRAM");
    recommend_cmd->add_flag("--full-sim", rec.full_sim,
                            "Predict multi-node times with the full simulator");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate_cmd->parsed()) return cmd_catalog_validate(global, validate_path);
        if (presets_list_cmd->parsed()) return cmd_presets_list(global);
        if (simulate_cmd->parsed()) return cmd_simulate(global, sim);
        if (stash_cmd->parsed()) return cmd_stash(global, stash);
        if (scale_cmd->parsed()) return cmd_scale(global, scale);
        if (recommend_cmd->parsed()) return cmd_recommend(global, rec);
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;
}
