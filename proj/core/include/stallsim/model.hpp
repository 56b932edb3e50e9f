#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stallsim {

struct LayerSpec {
    std::uint64_t gradient_bytes = 0;
    double backward_compute_per_sample = 0.0; // seconds
    double forward_compute_per_sample = 0.0;  // seconds
    bool is_batch_norm = false;
    // Residual joins reuse existing tensors and carry no parameters of their
    // own, so gradient_bytes must be 0 when this is set.
    bool is_residual_join = false;

    bool operator==(const LayerSpec&) const = default;
};

struct ModelDescriptor {
    std::string name;
    std::vector<LayerSpec> layers;
    std::uint64_t sample_bytes = 0; // size of one training sample on disk

    bool operator==(const ModelDescriptor&) const = default;
};

void validate(const ModelDescriptor& model);

std::uint64_t total_gradient_bytes(const ModelDescriptor& model);

// Layers that take part in gradient synchronization (gradient_bytes > 0).
int sync_layer_count(const ModelDescriptor& model);

double forward_compute_per_sample(const ModelDescriptor& model);
double backward_compute_per_sample(const ModelDescriptor& model);

// Uniform model: `layer_count` layers sharing `total_gradient_bytes` to
// within one byte per layer (the remainder is spread over the first layers,
// so the total is exact). Forward compute defaults to half of backward.
ModelDescriptor make_synthetic(int layer_count, std::uint64_t total_gradient_bytes,
                               double per_layer_backward,
                               std::uint64_t sample_bytes = 110'000);

// Drops batch-norm layers together with their gradients.
ModelDescriptor remove_batch_norm(const ModelDescriptor& model);

// Drops residual joins; total gradient bytes and sync layer count are
// unchanged because joins carry neither.
ModelDescriptor remove_residual(const ModelDescriptor& model);

std::vector<std::string> preset_names();
bool is_preset(std::string_view name);
ModelDescriptor preset(std::string_view name); // DomainError when unknown

struct PresetInfo {
    std::string name;
    std::uint64_t parameters = 0;
    int layer_count = 0;
    std::uint64_t sample_bytes = 0;
};
std::vector<PresetInfo> preset_infos();

ModelDescriptor parse_model(const std::string& json_text);
ModelDescriptor load_model(const std::string& path);

// Preset name or path to a model JSON file.
ModelDescriptor resolve_model(const std::string& name_or_path);

} // namespace stallsim
