#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsicnet.h"
#include "hsicnet/hsic.hpp"
#include "hsicnet/matrix.hpp"
#include "hsicnet/rng.hpp"

using nlohmann::json;
namespace fsys = std::filesystem;

namespace {

std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = fsys::temp_directory_path() /
             ("hsn_capi_" + tag + "_" + std::to_string(counter++));
  fsys::remove_all(dir);
  fsys::create_directories(dir);
  return dir.string();
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

// Small but complete synth config; the generator scale keeps runs fast.
std::string tiny_synth_config() {
  json cfg;
  cfg["seed"] = 5;
  cfg["dataset"]["synth"]["kind"] = "ecg";
  cfg["dataset"]["synth"]["n"] = 12;
  cfg["dataset"]["split"] = {{"train", 0.5}, {"val", 0.25}, {"test", 0.25}};
  return cfg.dump();
}

}  // namespace

TEST_CASE("version and initial error state") {
  const char* v = hsn_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);
  REQUIRE(hsn_last_error() != nullptr);
}

TEST_CASE("hsic statistic entry point matches the library computation") {
  hsicnet::Rng rng(42);
  const std::size_t n = 9, df = 3, dg = 4;
  std::vector<double> f(n * df), g(n * dg);
  for (auto& v : f) v = rng.normal();
  for (auto& v : g) v = rng.normal();

  double got = -1.0;
  REQUIRE(hsn_hsic_statistic(f.data(), n, df, g.data(), dg, 1.3, 0.8, &got) ==
          HSN_OK);

  hsicnet::Matrix mf(n, df), mg(n, dg);
  mf.data = f;
  mg.data = g;
  double want = hsicnet::hsic::hsic_statistic(mf, mg, 1.3, 0.8);
  CHECK(got == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("hsic statistic rejects null and degenerate arguments") {
  std::vector<double> f(4, 0.0), g(4, 0.0);
  double out = 0;
  CHECK(hsn_hsic_statistic(nullptr, 2, 2, g.data(), 2, 1, 1, &out) ==
        HSN_ERROR_INVALID_ARGUMENT);
  CHECK(std::strlen(hsn_last_error()) > 0);
  CHECK(hsn_hsic_statistic(f.data(), 2, 2, g.data(), 2, 1, 1, nullptr) ==
        HSN_ERROR_INVALID_ARGUMENT);
  // one row is not enough for a pairwise statistic
  CHECK(hsn_hsic_statistic(f.data(), 1, 4, g.data(), 4, 1, 1, &out) ==
        HSN_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("median heuristic entry point matches the library computation") {
  hsicnet::Rng rng(7);
  const std::size_t n = 11, d = 2;
  std::vector<double> x(n * d);
  for (auto& v : x) v = rng.uniform(-2.0, 2.0);

  double got = -1.0;
  REQUIRE(hsn_median_heuristic(x.data(), n, d, 1e-6, &got) == HSN_OK);

  hsicnet::Matrix mx(n, d);
  mx.data = x;
  CHECK(got == hsicnet::hsic::median_heuristic(mx, 1e-6));
}

TEST_CASE("experiment open validates config text and arguments") {
  hsn_experiment* exp = reinterpret_cast<hsn_experiment*>(0x1);

  CHECK(hsn_experiment_open_json("{ not json", nullptr, 0, &exp) ==
        HSN_ERROR_CONFIG);
  CHECK(exp == nullptr);

  exp = nullptr;
  CHECK(hsn_experiment_open_json(R"({"bogus_key": 1})", nullptr, 0, &exp) ==
        HSN_ERROR_CONFIG);
  CHECK(exp == nullptr);
  CHECK(std::string(hsn_last_error()).find("bogus_key") != std::string::npos);

  CHECK(hsn_experiment_open_json(nullptr, nullptr, 0, &exp) ==
        HSN_ERROR_INVALID_ARGUMENT);
  std::string cfg = tiny_synth_config();
  CHECK(hsn_experiment_open_json(cfg.c_str(), nullptr, 0, nullptr) ==
        HSN_ERROR_INVALID_ARGUMENT);
  CHECK(hsn_experiment_open_json(cfg.c_str(), nullptr, 3, &exp) ==
        HSN_ERROR_INVALID_ARGUMENT);

  CHECK(hsn_experiment_open("/no/such/config.json", nullptr, 0, &exp) ==
        HSN_ERROR_CONFIG);
}

TEST_CASE("experiment run: synth end to end with overrides") {
  std::string dir = temp_dir("synth");
  std::string cfg = tiny_synth_config();
  const char* overrides[] = {"seed=9", "dataset.synth.n=8"};

  hsn_experiment* exp = nullptr;
  REQUIRE(hsn_experiment_open_json(cfg.c_str(), overrides, 2, &exp) == HSN_OK);
  REQUIRE(exp != nullptr);
  REQUIRE(hsn_experiment_run(exp, "synth", dir.c_str()) == HSN_OK);
  hsn_experiment_close(exp);

  json manifest = json::parse(read_file(dir + "/data/manifest.json"));
  CHECK(manifest["records"].size() == 8);  // n override applied
  json run = json::parse(read_file(dir + "/run_manifest.json"));
  CHECK(run["seed"] == 9);  // seed override applied
  CHECK(run["subcommand"] == "synth");
  CHECK(run["version"] == std::string(hsn_version()));
  CHECK(fsys::exists(dir + "/events.json"));
}

TEST_CASE("experiment run maps error kinds onto status codes") {
  std::string dir = temp_dir("err");
  std::string cfg = tiny_synth_config();
  hsn_experiment* exp = nullptr;
  REQUIRE(hsn_experiment_open_json(cfg.c_str(), nullptr, 0, &exp) == HSN_OK);

  CHECK(hsn_experiment_run(nullptr, "synth", dir.c_str()) ==
        HSN_ERROR_INVALID_ARGUMENT);
  CHECK(hsn_experiment_run(exp, "frobnicate", dir.c_str()) ==
        HSN_ERROR_INVALID_ARGUMENT);
  CHECK(hsn_experiment_run(exp, nullptr, dir.c_str()) ==
        HSN_ERROR_INVALID_ARGUMENT);
  CHECK(hsn_experiment_run(exp, "synth", nullptr) ==
        HSN_ERROR_INVALID_ARGUMENT);
  // features without a manifest is a config error
  CHECK(hsn_experiment_run(exp, "features", dir.c_str()) == HSN_ERROR_CONFIG);
  hsn_experiment_close(exp);

  // missing dataset file surfaces as a data error
  const char* ov[] = {"dataset.manifest=/no/such/manifest.json",
                      "features=[\"rr\"]"};
  REQUIRE(hsn_experiment_open_json(cfg.c_str(), ov, 2, &exp) == HSN_OK);
  CHECK(hsn_experiment_run(exp, "features", dir.c_str()) == HSN_ERROR_DATA);
  CHECK(std::string(hsn_last_error()).find("/no/such/manifest.json") !=
        std::string::npos);
  hsn_experiment_close(exp);

  hsn_experiment_close(nullptr);  // must be a no-op
}
