// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>

#include "objnerf/checkpoint.hpp"

// doctest last: torch's c10 headers define a glog-style CHECK that
// must not shadow the doctest assertion macros.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

using namespace objnerf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "objnerf_ckpt_test";
  fs::create_directories(dir);
  return dir;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("checkpoint tensors round trip bit-exactly") {
  auto gen = at::detail::createCPUGenerator(1);
  Checkpoint ckpt;
  ckpt.tensors["a.weight"] = torch::randn({4, 7}, gen, torch::kFloat32);
  ckpt.tensors["a.bias"] = torch::randn({7}, gen, torch::kFloat64);
  ckpt.tensors["counter"] = torch::tensor(int64_t{42});
  ckpt.configs = {{"depth", 6}, {"name", "probe"}};

  const auto path = temp_dir() / "roundtrip.onrf";
  save_checkpoint(path, ckpt);
  auto loaded = load_checkpoint(path);

  REQUIRE(loaded.tensors.size() == 3);
  CHECK(torch::equal(loaded.tensors.at("a.weight"), ckpt.tensors.at("a.weight")));
  CHECK(torch::equal(loaded.tensors.at("a.bias"), ckpt.tensors.at("a.bias")));
  CHECK(loaded.tensors.at("counter").item<int64_t>() == 42);
  CHECK(loaded.configs.at("depth") == 6);
  CHECK(loaded.configs.at("name") == "probe");

  // save -> load -> save produces identical bytes.
  const auto path2 = temp_dir() / "roundtrip2.onrf";
  save_checkpoint(path2, loaded);
  CHECK(read_bytes(path) == read_bytes(path2));
}

TEST_CASE("module parameters restore bitwise") {
  torch::manual_seed(11);
  FieldConfig cfg;
  cfg.mlp_depth = 2;
  cfg.mlp_width = 16;
  cfg.code_dim = 4;
  cfg.position_encoding.num_frequencies = 2;
  cfg.direction_encoding.num_frequencies = 1;
  ConditionalField field(cfg);

  Checkpoint ckpt;
  collect_parameters(*field, "field.", ckpt.tensors);
  ckpt.configs["field"] = cfg;
  const auto path = temp_dir() / "field.onrf";
  save_checkpoint(path, ckpt);

  torch::manual_seed(999);  // different init
  ConditionalField other(ckpt.configs.at("field").get<FieldConfig>());
  auto loaded = load_checkpoint(path);
  restore_parameters(*other, "field.", loaded.tensors);
  auto a = field->named_parameters();
  auto b = other->named_parameters();
  for (const auto& p : a) {
    CHECK(torch::equal(p.value(), *b.find(p.key())));
  }

  SUBCASE("missing parameters are detected") {
    loaded.tensors.erase("field.density_head.bias");
    torch::manual_seed(1);
    ConditionalField fresh(cfg);
    CHECK_THROWS_AS(restore_parameters(*fresh, "field.", loaded.tensors), ParseError);
  }
}

TEST_CASE("corrupt containers are rejected") {
  const auto path = temp_dir() / "garbage.onrf";
  std::ofstream(path, std::ios::binary) << "this is not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  CHECK_THROWS_AS(load_checkpoint(temp_dir() / "missing.onrf"), IoError);
}

TEST_CASE("config structs round trip through json") {
  FieldConfig f;
  f.mlp_depth = 4;
  f.symmetry_enabled = true;
  nlohmann::json j = f;
  auto f2 = j.get<FieldConfig>();
  CHECK(f2.mlp_depth == 4);
  CHECK(f2.symmetry_enabled);
  CHECK(f2.position_encoding.num_frequencies == f.position_encoding.num_frequencies);

  PosePrior p;
  p.azimuth_max = 1.5;
  nlohmann::json jp = p;
  auto p2 = jp.get<PosePrior>();
  CHECK(p2.azimuth_max == 1.5);
  CHECK(p2.translation_mean == p.translation_mean);

  LossWeights w;
  w.pose_supervised = 2.0;
  nlohmann::json jw = w;
  CHECK(jw.get<LossWeights>().pose_supervised == 2.0);
}
