#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "stallsim/errors.hpp"
#include "stallsim/model.hpp"

using namespace stallsim;

TEST_CASE("preset gradient sizes match the published parameter counts") {
    // 4 bytes per fp32 parameter.
    CHECK(total_gradient_bytes(preset("vgg16")) == 134'700'000ull * 4);
    CHECK(total_gradient_bytes(preset("resnet152")) == 58'500'000ull * 4);
    CHECK(total_gradient_bytes(preset("alexnet")) == 9'630'000ull * 4);
    CHECK(total_gradient_bytes(preset("mobilenet_v2")) == 3'400'000ull * 4);
    CHECK(total_gradient_bytes(preset("squeezenet")) == 730'000ull * 4);
    CHECK(total_gradient_bytes(preset("shufflenet")) == 1'800'000ull * 4);
    CHECK(total_gradient_bytes(preset("resnet18")) == 11'180'000ull * 4);
    CHECK(total_gradient_bytes(preset("resnet50")) == 23'590'000ull * 4);
    CHECK(total_gradient_bytes(preset("vgg11")) == 132'800'000ull * 4);
    CHECK(total_gradient_bytes(preset("bert_large")) == 345'000'000ull * 4);
}

TEST_CASE("zero-gradient layers contribute nothing") {
    ModelDescriptor model;
    model.name = "zeros";
    model.layers.resize(3);
    CHECK(total_gradient_bytes(model) == 0);
    CHECK(sync_layer_count(model) == 0);
}

TEST_CASE("sync layer counting") {
    CHECK(sync_layer_count(preset("vgg11")) == 11);
    CHECK(sync_layer_count(preset("resnet152")) == 152);

    SUBCASE("residual joins do not synchronize") {
        ModelDescriptor model = make_synthetic(4, 4000, 1e-3);
        LayerSpec join;
        join.is_residual_join = true;
        model.layers.push_back(join);
        CHECK(model.layers.size() == 5);
        CHECK(sync_layer_count(model) == 4);
    }
    SUBCASE("single layer") {
        CHECK(sync_layer_count(make_synthetic(1, 100, 1e-3)) == 1);
    }
}

TEST_CASE("make_synthetic spreads the gradient exactly") {
    SUBCASE("resnet152 shape") {
        const ModelDescriptor m = make_synthetic(152, 234'000'000, 1e-4);
        CHECK(m.layers.size() == 152);
        CHECK(total_gradient_bytes(m) == 234'000'000);
        CHECK(sync_layer_count(m) == 152);
        // Uniform to within one byte per layer.
        CHECK(m.layers.front().gradient_bytes == doctest::Approx(234e6 / 152).epsilon(1e-6));
    }
    SUBCASE("one layer holds everything") {
        const ModelDescriptor m = make_synthetic(1, 98'765, 1e-4);
        CHECK(m.layers.size() == 1);
        CHECK(m.layers[0].gradient_bytes == 98'765);
    }
    SUBCASE("vgg16 shape") {
        const ModelDescriptor m = make_synthetic(16, 538'800'000, 1e-4);
        CHECK(m.layers[0].gradient_bytes == 33'675'000);
        CHECK(total_gradient_bytes(m) == 538'800'000);
    }
    SUBCASE("totals are exact for arbitrary layer counts") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> layers(1, 300);
        std::uniform_int_distribution<std::uint64_t> bytes(0, 1'000'000'007);
        for (int i = 0; i < 200; ++i) {
            const int count = layers(rng);
            const std::uint64_t total = bytes(rng);
            const ModelDescriptor m = make_synthetic(count, total, 1e-4);
            CHECK(total_gradient_bytes(m) == total);
            CHECK(static_cast<int>(m.layers.size()) == count);
        }
    }
    SUBCASE("invalid layer count") {
        CHECK_THROWS_AS(make_synthetic(0, 100, 1e-4), DomainError);
    }
}

namespace {

ModelDescriptor with_batch_norm(int regular, int bn, std::uint64_t bn_bytes) {
    ModelDescriptor model = make_synthetic(regular, 34'000'000, 1e-4);
    model.name = "bn_model";
    for (int i = 0; i < bn; ++i) {
        LayerSpec l;
        l.gradient_bytes = bn_bytes;
        l.backward_compute_per_sample = 1e-5;
        l.forward_compute_per_sample = 5e-6;
        l.is_batch_norm = true;
        model.layers.push_back(l);
    }
    return model;
}

} // namespace

TEST_CASE("remove_batch_norm drops the layers and their gradients") {
    SUBCASE("no batch norm is the identity") {
        const ModelDescriptor m = preset("vgg11");
        CHECK(remove_batch_norm(m) == m);
    }
    SUBCASE("a 50 layer model with 16 batch-norm layers keeps 34") {
        const ModelDescriptor m = with_batch_norm(34, 16, 8192);
        REQUIRE(m.layers.size() == 50);
        const ModelDescriptor stripped = remove_batch_norm(m);
        CHECK(stripped.layers.size() == 34);
        CHECK(sync_layer_count(stripped) == 34);
        CHECK(total_gradient_bytes(stripped) == total_gradient_bytes(m) - 16 * 8192);
        CHECK(sync_layer_count(stripped) < sync_layer_count(m));
    }
    SUBCASE("never increases size or sync count") {
        std::mt19937_64 rng(13);
        std::uniform_int_distribution<int> regular(1, 60);
        std::uniform_int_distribution<int> bn(0, 30);
        for (int i = 0; i < 100; ++i) {
            const ModelDescriptor m = with_batch_norm(regular(rng), bn(rng), 4096);
            const ModelDescriptor stripped = remove_batch_norm(m);
            CHECK(total_gradient_bytes(stripped) <= total_gradient_bytes(m));
            CHECK(sync_layer_count(stripped) <= sync_layer_count(m));
        }
    }
}

TEST_CASE("remove_residual keeps the communication-relevant structure") {
    SUBCASE("gradient totals and sync counts never change") {
        for (const auto& name : preset_names()) {
            const ModelDescriptor m = preset(name);
            const ModelDescriptor stripped = remove_residual(m);
            CHECK(total_gradient_bytes(stripped) == total_gradient_bytes(m));
            CHECK(sync_layer_count(stripped) == sync_layer_count(m));
        }
    }
    SUBCASE("no joins is the identity") {
        const ModelDescriptor m = preset("vgg16");
        CHECK(remove_residual(m) == m);
    }
    SUBCASE("deep residual preset keeps its sync layer list") {
        const ModelDescriptor m = preset("resnet152");
        const ModelDescriptor stripped = remove_residual(m);
        std::vector<std::uint64_t> before, after;
        for (const auto& l : m.layers) {
            if (l.gradient_bytes > 0) before.push_back(l.gradient_bytes);
        }
        for (const auto& l : stripped.layers) {
            if (l.gradient_bytes > 0) after.push_back(l.gradient_bytes);
        }
        CHECK(before == after);
        CHECK(stripped.layers.size() < m.layers.size());
    }
}

TEST_CASE("validation rejects gradient-carrying residual joins") {
    ModelDescriptor model = make_synthetic(2, 1000, 1e-4);
    model.layers[1].is_residual_join = true;
    CHECK_THROWS_AS(validate(model), ValidationError);
}

TEST_CASE("model files round-trip through the loader") {
    const char* path = "test_model_tmp.json";
    {
        std::ofstream out(path);
        out << R"({
  "name": "tiny",
  "sample_bytes": 1024,
  "layers": [
    {"gradient_bytes": 4096, "backward_s_per_sample": 2e-4, "forward_s_per_sample": 1e-4},
    {"gradient_bytes": 0, "backward_s_per_sample": 0, "forward_s_per_sample": 0,
     "residual_join": true},
    {"gradient_bytes": 128, "backward_s_per_sample": 1e-5, "forward_s_per_sample": 5e-6,
     "batch_norm": true}
  ]
})";
    }
    const ModelDescriptor m = load_model(path);
    CHECK(m.name == "tiny");
    CHECK(m.sample_bytes == 1024);
    CHECK(m.layers.size() == 3);
    CHECK(sync_layer_count(m) == 2);
    CHECK(m.layers[1].is_residual_join);
    CHECK(m.layers[2].is_batch_norm);

    CHECK(resolve_model(path).name == "tiny");
    CHECK(resolve_model("vgg16").name == "vgg16");
    CHECK_THROWS_AS(resolve_model("no_such_model"), DomainError);
    std::remove(path);
}
