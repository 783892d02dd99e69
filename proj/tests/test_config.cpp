// Copyright 2026 The knowdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <json.hpp>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/config.hpp"
#include "test_util.hpp"

using namespace knowdiff;

TEST_CASE("defaults round trip through JSON") {
  const PipelineConfig d;
  const nlohmann::json j = ToJson(d);
  CHECK(ToJson(ConfigFromJson(j)) == j);
  CHECK(ToJson(ParseConfig("{}")) == j);
}

TEST_CASE("partial overrides keep the other defaults") {
  const PipelineConfig c = ParseConfig(R"({"train": {"steps": 50}, "infer": {"t1": 0.02, "t2": 0.2},
                                         "generator": {"kinds": ["u_turn"]}, "remote": {"max_retries": 4}})");
  CHECK(c.train.steps == 50);
  CHECK(c.train.batch_size == TrainConfig{}.batch_size);
  CHECK(c.planner.infer.t1 == 0.02);
  CHECK(c.planner.infer.t2 == 0.2);
  CHECK(c.generator.kinds == std::vector<std::string>{"u_turn"});
  CHECK(c.remote.max_retries == 4);
}

TEST_CASE("unknown keys, wrong types and invalid values are config errors") {
  kdtest::ExpectCode([] { ParseConfig(R"({"trian": {}})"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig(R"({"train": {"stepz": 1}})"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig(R"({"train": {"steps": "many"}})"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig(R"({"train": {"steps": -3}})"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig(R"({"infer": {"t1": 0.2, "t2": 0.1}})"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig("[1, 2]"); }, ErrorCode::kConfig);
  kdtest::ExpectCode([] { ParseConfig("{"); }, ErrorCode::kConfig);
}

TEST_CASE("config files") {
  kdtest::TempDir dir;
  WriteTextFile(dir / "c.json", R"({"sim": {"reactive": true}})");
  CHECK(LoadConfig(dir / "c.json").sim.reactive);
  kdtest::ExpectCode([&] { LoadConfig(dir / "missing.json"); }, ErrorCode::kIo);
}
