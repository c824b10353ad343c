// Copyright (C) 2026 FusionEdit Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "fusionedit/config.hpp"
#include "fusionedit/pipeline.hpp"
#include "fusionedit/providers.hpp"
#include "fusionedit/tensor_io.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fusionedit;
using namespace fusionedit::testing;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    const std::string command = std::string(FUSIONEDIT_CLI_PATH) + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

// Two-blob fixture: the target differs from the source only inside one rectangle.
struct BlobFixture {
    TempDir dir;
    std::filesystem::path params = dir / "blob.json";
    std::filesystem::path source = dir / "source.npy";

    BlobFixture() {
        write_json(params, {{"shape", {2, 32, 32}},
                            {"rect", {8, 8, 24, 24}},
                            {"offsets", {{"src", {0.0, 0.0}}, {"tar", {1.0, -0.5}}, {"null", {0.0, 0.0}}}},
                            {"decay", 0.5},
                            {"coupling", 0.5}});
        std::mt19937_64 rng(17);
        write_tensor(random_tensor(rng, 2, 32, 32), source);
    }
    std::string provider() const { return "twoblob:" + params.string(); }
};

}  // namespace

TEST_CASE("config: defaults, json round trip and unknown keys") {
    EditConfig c;
    CHECK_NOTHROW(c.validate());
    c.steps = 9;
    c.merge_ratio = 0.75;
    c.seed = 123;
    json original = c;
    EditConfig back;
    apply_json(back, original);
    CHECK(json(back) == original);

    EditConfig target;
    CHECK_THROWS_AS(apply_json(target, json{{"stepz", 3}}), ConfigError);
    CHECK_THROWS_AS(apply_json(target, json{{"steps", "many"}}), ConfigError);

    EditConfig bad;
    bad.t_prime = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = EditConfig{};
    bad.merge_ratio = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("pipeline: identical prompts return the source") {
    std::mt19937_64 rng(1);
    const auto x = random_tensor(rng, 4, 32, 32);
    const auto mu = random_tensor(rng, 4, 32, 32);
    AnalyticProvider p({{"src", mu}, {"tar", mu}, {"null", mu}});
    const auto r = run_edit(p, x, EditConfig{});
    CHECK(r.status == RegionStatus::empty_edit_region);
    CHECK(max_abs_diff(r.edited, x) <= 1e-5);
    CHECK(r.preserved.mse == 0.0);
}

TEST_CASE("pipeline: two-blob edit stays inside the blob") {
    std::mt19937_64 rng(2);
    const auto x = random_tensor(rng, 2, 32, 32);
    TwoBlobProvider p(2, 32, 32, Rect{8, 8, 24, 24}, {{"src", {0.0, 0.0}}, {"tar", {1.0, -0.5}}, {"null", {0.0, 0.0}}},
                      0.5, 0.5);
    EditConfig config;
    config.steps = 12;
    const auto masked = run_edit(p, x, config);
    CHECK(masked.status == RegionStatus::ok);
    CHECK(masked.mask.region.mask.count() == 16 * 16);
    CHECK(masked.delta_bar > 0.0);

    config.mask_enabled = false;
    const auto unmasked = run_edit(p, x, config);
    CHECK(masked.preserved.mse < unmasked.preserved.mse);

    // Far from the blob the masked edit is untouched.
    CHECK(masked.edited.at(0, 0, 0) == x.at(0, 0, 0));
    CHECK(masked.edited.at(1, 31, 31) == x.at(1, 31, 31));
}

TEST_CASE("pipeline: stage errors keep the usage flag") {
    ConstantProvider p({{"src", 0.0f}, {"tar", 1.0f}});
    EditConfig config;
    config.repeats = 0;
    try {
        run_edit(p, LatentTensor(1, 8, 8), config);
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "config");
        CHECK(e.is_usage_error());
    }
}

TEST_CASE("preserved region uses the 0.5 threshold") {
    SoftMask m(1, 3);
    m.weights = {0.2, 0.5, 0.9};
    const auto keep = preserved_region(m);
    CHECK(keep.bits == std::vector<std::uint8_t>{1, 0, 0});
}

TEST_CASE("cli: discrepancy, mask and edit outputs") {
    BlobFixture f;
    const auto out = f.dir / "run";
    const auto disc = run_cli("discrepancy --provider " + f.provider() + " --source " + f.source.string() + " --out " +
                              out.string());
    REQUIRE(disc.exit_code == 0);
    const auto dj = json::parse(disc.out);
    CHECK(dj["repeats"] == 3);
    CHECK(dj["max"].get<double>() > 0.0);
    CHECK(std::filesystem::exists(out / "discrepancy.npy"));
    CHECK(std::filesystem::exists(out / "discrepancy.png"));

    const auto mask = run_cli("mask --discrepancy " + (out / "discrepancy.npy").string() + " --out " + out.string());
    REQUIRE(mask.exit_code == 0);
    const auto mj = json::parse(mask.out);
    CHECK(mj["status"] == "ok");
    CHECK(mj["region_pixels"] == 256);
    CHECK(mj["band_pixels"].get<int>() > 0);
    for (const char* name : {"mask_binary.npy", "mask_binary.png", "mask_soft.npy", "mask_soft.png"}) {
        CHECK(std::filesystem::exists(out / name));
    }

    const auto edit = run_cli("edit --provider " + f.provider() + " --source " + f.source.string() +
                              " --steps 8 --out " + out.string());
    REQUIRE(edit.exit_code == 0);
    const auto ej = json::parse(edit.out);
    CHECK(ej["status"] == "ok");
    CHECK(ej["preserved"]["mse"].get<double>() >= 0.0);
    const auto edited = read_tensor(out / "edited.npy");
    CHECK(edited.same_shape(read_tensor(f.source)));
}

TEST_CASE("cli: masked edit preserves more than the unmasked edit") {
    BlobFixture f;
    const std::string base = "edit --provider " + f.provider() + " --source " + f.source.string() + " --steps 8 ";
    const auto masked = run_cli(base + "--out " + (f.dir / "a").string());
    const auto unmasked = run_cli(base + "--no-mask --out " + (f.dir / "b").string());
    REQUIRE(masked.exit_code == 0);
    REQUIRE(unmasked.exit_code == 0);
    CHECK(json::parse(masked.out)["preserved"]["mse"].get<double>() <
          json::parse(unmasked.out)["preserved"]["mse"].get<double>());
}

TEST_CASE("cli: edits are byte-for-byte reproducible") {
    BlobFixture f;
    const std::string base =
        "edit --provider " + f.provider() + " --source " + f.source.string() + " --steps 6 --seed 5 --out ";
    REQUIRE(run_cli(base + (f.dir / "one").string()).exit_code == 0);
    REQUIRE(run_cli(base + (f.dir / "two").string()).exit_code == 0);
    for (const char* name : {"edited.npy", "mask_soft.npy", "discrepancy.npy"}) {
        CHECK(slurp(f.dir / "one" / name) == slurp(f.dir / "two" / name));
    }
}

TEST_CASE("cli: metrics") {
    TempDir dir;
    std::mt19937_64 rng(3);
    const auto a = random_tensor(rng, 1, 16, 16, 0.0, 0.5);
    LatentTensor b = a;
    for (auto& v : b.data()) v += 0.1f;
    write_tensor(a, dir / "a.npy");
    write_tensor(b, dir / "b.npy");
    const auto r = run_cli("metrics " + (dir / "a.npy").string() + " " + (dir / "b.npy").string());
    REQUIRE(r.exit_code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["mse"].get<double>() == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(j["psnr"].get<double>() == doctest::Approx(20.0).epsilon(1e-4));

    const auto same = json::parse(run_cli("metrics " + (dir / "a.npy").string() + " " + (dir / "a.npy").string()).out);
    CHECK(same["psnr"] == "inf");
    CHECK(same["ssim"] == 1.0);

    write_tensor(LatentTensor(1, 8, 8), dir / "c.npy");
    CHECK(run_cli("metrics " + (dir / "a.npy").string() + " " + (dir / "c.npy").string()).exit_code == 2);
}

TEST_CASE("cli: usage errors exit with status 2") {
    BlobFixture f;
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("edit --bogus").exit_code == 2);
    CHECK(run_cli("edit --provider analytic:" + (f.dir / "missing.json").string() + " --source " +
                  f.source.string() + " --out " + f.dir.path().string())
              .exit_code == 2);
    CHECK(run_cli("edit --provider " + f.provider() + " --source " + (f.dir / "none.npy").string() + " --out " +
                  f.dir.path().string())
              .exit_code == 2);
    CHECK(run_cli("edit --provider " + f.provider() + " --source " + f.source.string() + " --merge-ratio 2 --out " +
                  f.dir.path().string())
              .exit_code == 2);

    // A grid provider cannot expose value tensors, so modulation is rejected.
    const auto manifest = f.dir / "grid.json";
    json m = {{"conditionings", {"src", "tar"}}, {"steps", 1}, {"files", json::object()}};
    for (const std::string c : {"src", "tar"}) {
        write_tensor(LatentTensor(2, 32, 32, c == "tar" ? 1.0f : 0.0f), f.dir / (c + ".npy"));
        m["files"][c + "/0"] = c + ".npy";
    }
    write_json(manifest, m);
    const std::string grid = "edit --provider grid:" + manifest.string() + " --source " + f.source.string() +
                             " --src-guidance 1 --tar-guidance 1 --steps 1 --out " + f.dir.path().string();
    CHECK(run_cli(grid + " --dam").exit_code == 2);
    CHECK(run_cli(grid + " --no-dam").exit_code == 0);
}
