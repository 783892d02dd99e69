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

// One JSON file holding every pipeline hyperparameter. Missing keys keep
// their defaults; unknown keys and ill-typed values are kConfig errors.

#ifndef KNOWDIFF_CONFIG_HPP_
#define KNOWDIFF_CONFIG_HPP_

#include <filesystem>
#include <json.hpp>
#include <string>

#include "knowdiff/diffusion.hpp"
#include "knowdiff/generator.hpp"
#include "knowdiff/planner.hpp"
#include "knowdiff/remote.hpp"
#include "knowdiff/sim.hpp"

namespace knowdiff {

struct PipelineConfig {
  GeneratorConfig generator;
  double window_s = 8.0;
  DenoiserArch arch;
  std::uint64_t init_seed = 1;
  NoiseSchedule schedule;
  TrainConfig train;
  KnowDiffuserOptions planner;
  SimConfig sim;
  RemoteConfig remote;

  void Validate() const;
};

PipelineConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ToJson(const PipelineConfig& cfg);
PipelineConfig LoadConfig(const std::filesystem::path& path);
PipelineConfig ParseConfig(const std::string& text);

}  // namespace knowdiff

#endif  // KNOWDIFF_CONFIG_HPP_
