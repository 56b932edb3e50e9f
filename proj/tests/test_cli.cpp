#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

std::string cli_path() {
    const char* env = std::getenv("STALLSIM_BIN");
    REQUIRE_MESSAGE(env != nullptr, "STALLSIM_BIN must point at the stallsim binary");
    return env;
}

std::string catalog_path() {
    const char* env = std::getenv("STALLSIM_TEST_CATALOG");
    REQUIRE_MESSAGE(env != nullptr, "STALLSIM_TEST_CATALOG must point at aws_p.json");
    return env;
}

// Runs the CLI with stderr routed to `stderr_file` (or /dev/null).
RunResult run_cli(const std::string& args, const std::string& stderr_file = "/dev/null") {
    const std::string cmd = cli_path() + " --catalog " + catalog_path() + " " + args + " 2>" +
                            stderr_file;
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer{};
    std::size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
        result.out.append(buffer.data(), n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("catalog validate") {
    SUBCASE("the shipped catalog is valid") {
        const RunResult r = run_cli("catalog validate");
        CHECK(r.exit_code == 0);
        CHECK(r.out == "catalog OK: 8 instance types\n");
    }
    SUBCASE("a negative latency fails with the field name") {
        const std::string path = "bad_catalog_tmp.json";
        {
            std::ofstream out(path);
            out << R"({"instances": [{"name": "bad", "gpu_count": 1, "vcpus": 4,
                "gpu_memory_gb": 12, "main_memory_gb": 61,
                "interconnect": {"kind": "shared_bus", "aggregate_bandwidth_gbps": 128,
                                 "latency_us": -5},
                "network_bandwidth_gbps": 10, "network_latency_us": 50,
                "disk_throughput_mbps": 250, "cpu_prep_throughput_sps": 4000,
                "price_per_hour_usd": 0.9}]})";
        }
        const std::string err_file = "bad_catalog_err_tmp.txt";
        const RunResult r = run_cli("catalog validate " + path, err_file);
        CHECK(r.exit_code == 2);
        const std::string err = slurp(err_file);
        CHECK(err.find("latency_us") != std::string::npos);
        std::remove(path.c_str());
        std::remove(err_file.c_str());
    }
    SUBCASE("a missing file reports file not found") {
        const std::string err_file = "missing_catalog_err_tmp.txt";
        const RunResult r = run_cli("catalog validate /no/such/file.json", err_file);
        CHECK(r.exit_code == 2);
        CHECK(slurp(err_file).find("file not found") != std::string::npos);
        std::remove(err_file.c_str());
    }
}

TEST_CASE("presets list knows the built-in models") {
    const RunResult r = run_cli("presets list --format csv");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("vgg16,134700000,16,110000") != std::string::npos);
    CHECK(r.out.find("resnet152,58500000,152,110000") != std::string::npos);
    CHECK(r.out.find("bert_large,345000000,24,1000") != std::string::npos);
}

TEST_CASE("stash emits the frozen report for the reference invocation") {
    const RunResult r = run_cli("stash p3.16xlarge resnet50 --batch 32 --format json");
    CHECK(r.exit_code == 0);
    const char* golden_dir = std::getenv("STALLSIM_TEST_GOLDEN");
    REQUIRE(golden_dir != nullptr);
    const std::string golden = slurp(std::string(golden_dir) + "/stash_p3_resnet50_b32.json");
    REQUIRE_FALSE(golden.empty());
    CHECK(r.out == golden);
}

TEST_CASE("stash rejects batches that cannot fit in GPU memory") {
    const RunResult r = run_cli("stash p3.16xlarge resnet50 --batch 200000");
    CHECK(r.exit_code == 3);
}

TEST_CASE("stash multi-node populates the network fields") {
    const RunResult r = run_cli("stash p3.16xlarge vgg11 --batch 32 --multi-node 2x4 "
                                "--format json");
    CHECK(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("multi_node_time_s").is_number());
    CHECK(doc.at("network_stall_s").is_number());
    CHECK(doc.at("network_stall_s").get<double>() > 0.0);

    SUBCASE("mismatched splits are config errors") {
        const RunResult bad = run_cli("stash p3.16xlarge vgg11 --multi-node 2x3");
        CHECK(bad.exit_code == 2);
    }
}

TEST_CASE("scale prints one row per instance count") {
    const RunResult r = run_cli("scale resnet50 p3.16xlarge --n 1..8 --format csv");
    CHECK(r.exit_code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int rows = 0;
    bool header_seen = false;
    while (std::getline(lines, line)) {
        if (!header_seen) {
            CHECK(line == "n,epoch_time_s,total_time_s,network_stall_s,network_stall_pct,"
                          "cost_usd");
            header_seen = true;
        } else if (!line.empty()) {
            ++rows;
        }
    }
    CHECK(rows == 8);

    SUBCASE("the pretty table flags the best row") {
        const RunResult pretty = run_cli("scale resnet50 p3.16xlarge --n 1..8 --format pretty");
        CHECK(pretty.exit_code == 0);
        CHECK(pretty.out.find("*") != std::string::npos);
    }
}

TEST_CASE("recommend reports budget infeasibility on stderr but exits cleanly") {
    const std::string err_file = "recommend_err_tmp.txt";
    const RunResult r =
        run_cli("recommend resnet50 --budget 0.0001 --epochs 1 --format json", err_file);
    CHECK(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc.at("feasible").get<bool>() == false);
    CHECK(slurp(err_file).find("warning") != std::string::npos);
    std::remove(err_file.c_str());

    SUBCASE("a huge budget is feasible and cheap") {
        const RunResult ok = run_cli("recommend resnet50 --budget 1e12 --format json");
        CHECK(ok.exit_code == 0);
        const auto rec = nlohmann::json::parse(ok.out);
        CHECK(rec.at("feasible").get<bool>() == true);
        CHECK(rec.at("config").at("instance").get<std::string>() == "p2.xlarge");
        CHECK(rec.at("config").at("count").get<int>() == 1);
    }
}

TEST_CASE("the STALLSIM_CATALOG variable supplies the default catalog") {
    const std::string cmd = "STALLSIM_CATALOG=" + catalog_path() + " " + cli_path() +
                            " catalog validate 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 256> buffer{};
    std::string out;
    std::size_t n = 0;
    while ((n = fread(buffer.data(), 1, buffer.size(), pipe)) > 0) out.append(buffer.data(), n);
    const int status = pclose(pipe);
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(out == "catalog OK: 8 instance types\n");
}

TEST_CASE("simulate covers multi-node rings and the ring volume model") {
    const RunResult simple = run_cli("simulate vgg11 p3.8xlarge --nodes 2 --batch 32 "
                                     "--synthetic --format json");
    CHECK(simple.exit_code == 0);
    const auto doc = nlohmann::json::parse(simple.out);
    CHECK(doc.at("comm_network_exposed_s").get<double>() > 0.0);
    CHECK(doc.at("comm_interconnect_exposed_s").get<double>() == 0.0);

    const RunResult ring = run_cli("simulate vgg11 p3.8xlarge --nodes 2 --batch 32 "
                                   "--synthetic --mode ring --format json");
    CHECK(ring.exit_code == 0);
    CHECK(nlohmann::json::parse(ring.out) != doc); // ring volume accounting differs
}

TEST_CASE("repeated invocations are byte-identical") {
    const std::array<std::string, 5> commands = {
        "presets list --format json",
        "simulate resnet50 p3.16xlarge --batch 32 --format json",
        "stash p2.16xlarge resnet18 --batch 8 --format csv",
        "scale vgg11 p3.8xlarge --n 1..6 --format csv",
        "recommend alexnet --budget 1e9 --format json",
    };
    for (const auto& cmd : commands) {
        const RunResult a = run_cli(cmd);
        const RunResult b = run_cli(cmd);
        CHECK(a.exit_code == 0);
        CHECK(a.out == b.out);
        CHECK_FALSE(a.out.empty());
    }
}
