#include "stallsim/model.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stallsim/errors.hpp"

namespace stallsim {

using nlohmann::json;

void validate(const ModelDescriptor& model) {
    if (model.layers.empty()) {
        throw ValidationError(model.name + ": layers must be non-empty");
    }
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        const std::string ctx = model.name + ".layers[" + std::to_string(i) + "]";
        if (l.backward_compute_per_sample < 0 || l.forward_compute_per_sample < 0) {
            throw ValidationError(ctx + ": compute times must be >= 0");
        }
        if (l.is_residual_join && l.gradient_bytes != 0) {
            throw ValidationError(ctx + ": residual joins carry no gradient bytes");
        }
    }
}

std::uint64_t total_gradient_bytes(const ModelDescriptor& model) {
    std::uint64_t total = 0;
    for (const auto& l : model.layers) total += l.gradient_bytes;
    return total;
}

int sync_layer_count(const ModelDescriptor& model) {
    int count = 0;
    for (const auto& l : model.layers) {
        if (l.gradient_bytes > 0) ++count;
    }
    return count;
}

double forward_compute_per_sample(const ModelDescriptor& model) {
    double total = 0.0;
    for (const auto& l : model.layers) total += l.forward_compute_per_sample;
    return total;
}

double backward_compute_per_sample(const ModelDescriptor& model) {
    double total = 0.0;
    for (const auto& l : model.layers) total += l.backward_compute_per_sample;
    return total;
}

ModelDescriptor make_synthetic(int layer_count, std::uint64_t total_bytes,
                               double per_layer_backward, std::uint64_t sample_bytes) {
    if (layer_count < 1) throw DomainError("make_synthetic: layer_count must be >= 1");
    if (per_layer_backward < 0) throw DomainError("make_synthetic: backward time must be >= 0");

    const std::uint64_t layers = static_cast<std::uint64_t>(layer_count);
    const std::uint64_t base = total_bytes / layers;
    const std::uint64_t remainder = total_bytes % layers;

    ModelDescriptor model;
    model.name = "synthetic_" + std::to_string(layer_count) + "x" + std::to_string(base);
    model.sample_bytes = sample_bytes;
    model.layers.reserve(layers);
    for (std::uint64_t i = 0; i < layers; ++i) {
        LayerSpec l;
        l.gradient_bytes = base + (i < remainder ? 1 : 0);
        l.backward_compute_per_sample = per_layer_backward;
        l.forward_compute_per_sample = per_layer_backward / 2.0;
        model.layers.push_back(l);
    }
    return model;
}

ModelDescriptor remove_batch_norm(const ModelDescriptor& model) {
    ModelDescriptor out;
    out.name = model.name;
    out.sample_bytes = model.sample_bytes;
    std::copy_if(model.layers.begin(), model.layers.end(), std::back_inserter(out.layers),
                 [](const LayerSpec& l) { return !l.is_batch_norm; });
    return out;
}

ModelDescriptor remove_residual(const ModelDescriptor& model) {
    ModelDescriptor out;
    out.name = model.name;
    out.sample_bytes = model.sample_bytes;
    std::copy_if(model.layers.begin(), model.layers.end(), std::back_inserter(out.layers),
                 [](const LayerSpec& l) { return !l.is_residual_join; });
    return out;
}

namespace {

struct PresetDef {
    const char* name;
    std::uint64_t parameters;
    int layer_count;     // weight layers taking part in synchronization
    int residual_joins;  // parameter-free skip connections
    std::uint64_t sample_bytes;
    double forward_ms_per_sample;  // whole model, per sample
    double backward_ms_per_sample; // whole model, per sample
};

// Parameter counts follow the published architectures; per-sample compute
// times are calibration constants sized so that compute dominates
// communication at batch 128 on a V100-class interconnect.
constexpr PresetDef kPresets[] = {
    {"alexnet", 9'630'000, 8, 0, 110'000, 0.20, 0.40},
    {"mobilenet_v2", 3'400'000, 53, 10, 110'000, 0.15, 0.30},
    {"squeezenet", 730'000, 26, 0, 110'000, 0.12, 0.24},
    {"shufflenet", 1'800'000, 56, 0, 110'000, 0.10, 0.20},
    {"resnet18", 11'180'000, 18, 8, 110'000, 0.40, 0.80},
    {"resnet50", 23'590'000, 50, 16, 110'000, 0.90, 1.80},
    {"vgg11", 132'800'000, 11, 0, 110'000, 1.50, 3.00},
    {"bert_large", 345'000'000, 24, 0, 1'000, 8.00, 16.00},
    {"vgg16", 134'700'000, 16, 0, 110'000, 2.50, 5.00},
    {"resnet152", 58'500'000, 152, 50, 110'000, 2.20, 4.40},
};

constexpr std::uint64_t bytes_per_parameter = 4; // fp32 gradients

ModelDescriptor build_preset(const PresetDef& def) {
    ModelDescriptor model = make_synthetic(def.layer_count,
                                           def.parameters * bytes_per_parameter,
                                           def.backward_ms_per_sample * 1e-3 / def.layer_count,
                                           def.sample_bytes);
    model.name = def.name;
    for (auto& l : model.layers) {
        l.forward_compute_per_sample = def.forward_ms_per_sample * 1e-3 / def.layer_count;
    }
    if (def.residual_joins > 0) {
        // Spread the joins through the layer stack; they cost nothing.
        ModelDescriptor with_joins;
        with_joins.name = model.name;
        with_joins.sample_bytes = model.sample_bytes;
        const int stride = std::max(1, def.layer_count / def.residual_joins);
        int placed = 0;
        for (int i = 0; i < def.layer_count; ++i) {
            with_joins.layers.push_back(model.layers[static_cast<std::size_t>(i)]);
            if (placed < def.residual_joins && (i + 1) % stride == 0) {
                LayerSpec join;
                join.is_residual_join = true;
                with_joins.layers.push_back(join);
                ++placed;
            }
        }
        for (; placed < def.residual_joins; ++placed) {
            LayerSpec join;
            join.is_residual_join = true;
            with_joins.layers.push_back(join);
        }
        model = std::move(with_joins);
    }
    return model;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& def : kPresets) names.emplace_back(def.name);
    return names;
}

bool is_preset(std::string_view name) {
    for (const auto& def : kPresets) {
        if (name == def.name) return true;
    }
    return false;
}

ModelDescriptor preset(std::string_view name) {
    for (const auto& def : kPresets) {
        if (name == def.name) return build_preset(def);
    }
    throw DomainError("unknown preset \"" + std::string(name) + "\"");
}

std::vector<PresetInfo> preset_infos() {
    std::vector<PresetInfo> infos;
    for (const auto& def : kPresets) {
        infos.push_back({def.name, def.parameters, def.layer_count, def.sample_bytes});
    }
    return infos;
}

namespace {

double layer_number(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.contains(key)) throw ValidationError(ctx + ": missing field " + key);
    if (!obj.at(key).is_number()) {
        throw ValidationError(ctx + ": field " + key + " must be a number");
    }
    return obj.at(key).get<double>();
}

} // namespace

ModelDescriptor parse_model(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc.contains("layers") ||
        !doc.at("layers").is_array()) {
        throw ValidationError("model: expected an object with \"name\" and a \"layers\" array");
    }
    ModelDescriptor model;
    model.name = doc.at("name").get<std::string>();
    model.sample_bytes = doc.value("sample_bytes", std::uint64_t{0});
    std::size_t index = 0;
    for (const auto& entry : doc.at("layers")) {
        const std::string ctx = model.name + ".layers[" + std::to_string(index++) + "]";
        LayerSpec l;
        l.gradient_bytes = static_cast<std::uint64_t>(layer_number(entry, "gradient_bytes", ctx));
        l.backward_compute_per_sample = layer_number(entry, "backward_s_per_sample", ctx);
        l.forward_compute_per_sample = layer_number(entry, "forward_s_per_sample", ctx);
        l.is_batch_norm = entry.value("batch_norm", false);
        l.is_residual_join = entry.value("residual_join", false);
        model.layers.push_back(l);
    }
    validate(model);
    return model;
}

ModelDescriptor load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("model: file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

ModelDescriptor resolve_model(const std::string& name_or_path) {
    if (is_preset(name_or_path)) return preset(name_or_path);
    if (std::filesystem::exists(name_or_path)) return load_model(name_or_path);
    throw DomainError("\"" + name_or_path + "\" is neither a preset nor a model file");
}

} // namespace stallsim
