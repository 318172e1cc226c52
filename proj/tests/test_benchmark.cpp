#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

#include "solarnet/benchmark.hpp"

using namespace solarnet;
namespace fs = std::filesystem;

namespace {

InferenceRunner sleeping_stub(int millis) {
    return [millis](const Tensor<float>&) {
        std::this_thread::sleep_for(std::chrono::milliseconds(millis));
    };
}

}  // namespace

TEST_CASE("a constant-latency stub measures near its analytic throughput") {
    // 5 ms per batch of 32 -> 6400 images/s
    const auto result = measure_fps(sleeping_stub(5), 16, 32, 2, 20);
    REQUIRE(result.fps == Catch::Approx(6400.0).epsilon(0.15));
    REQUIRE(result.batch_size == 32);
    REQUIRE(result.timed_iters == 20);
}

TEST_CASE("doubling timed iterations barely moves a stationary measurement") {
    const auto a = measure_fps(sleeping_stub(4), 16, 32, 2, 15);
    const auto b = measure_fps(sleeping_stub(4), 16, 32, 2, 30);
    REQUIRE(std::abs(a.fps - b.fps) / a.fps < 0.05);
}

TEST_CASE("benchmark parameter validation") {
    REQUIRE_THROWS_AS(measure_fps(sleeping_stub(1), 16, 32, 0, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(measure_fps(sleeping_stub(1), 16, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("checkpoint benchmarking reads the file without mutating it") {
    ModelSpec spec;
    spec.backbone.name = "tiny";
    spec.num_classes = 3;
    Model<float> model(spec, 0);
    const fs::path path = fs::temp_directory_path() / "solarnet_bench.ckpt";
    save_checkpoint(path, model, {});

    std::ifstream before_f(path, std::ios::binary);
    const std::string before((std::istreambuf_iterator<char>(before_f)),
                             std::istreambuf_iterator<char>());

    const auto result = measure_fps_checkpoint(path, 16, 4, 1, 3);
    REQUIRE(result.fps > 0.0);
    REQUIRE(result.size_mb == Catch::Approx(static_cast<double>(before.size()) / (1 << 20)));

    std::ifstream after_f(path, std::ios::binary);
    const std::string after((std::istreambuf_iterator<char>(after_f)),
                            std::istreambuf_iterator<char>());
    REQUIRE(before == after);
    fs::remove(path);
}

TEST_CASE("size grows strictly when attention parameters are added") {
    ModelSpec off;
    off.backbone.name = "tiny";
    off.num_classes = 4;
    off.use_cbam = false;
    ModelSpec on = off;
    on.use_cbam = true;
    Model<float> a(off, 0), b(on, 0);
    REQUIRE(serialized_size_bytes(b) > serialized_size_bytes(a));
}

TEST_CASE("an injected per-epoch latency is timed to within ten percent") {
    const double seconds = measure_wall_seconds([] {
        for (int epoch = 0; epoch < 2; ++epoch)
            std::this_thread::sleep_for(std::chrono::milliseconds(400));
    });
    REQUIRE(seconds == Catch::Approx(0.8).epsilon(0.10));
}

TEST_CASE("benchmark json carries the measurement protocol") {
    auto result = measure_fps(sleeping_stub(2), 8, 8, 1, 4, "test-box");
    result.size_mb = 1.5;
    const auto j = result.to_json();
    REQUIRE(j.at("hardware_label") == "test-box");
    REQUIRE(j.at("warmup_iters") == 1);
    REQUIRE(j.at("timed_iters") == 4);
    REQUIRE(j.at("batch_size") == 8);
    REQUIRE(double(j.at("size_mb")) == 1.5);
}
