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

// Open- and closed-loop evaluation drivers, report files and the training
// set extracted from logs.

#ifndef KNOWDIFF_EVALUATE_HPP_
#define KNOWDIFF_EVALUATE_HPP_

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "knowdiff/diffusion.hpp"
#include "knowdiff/metrics.hpp"
#include "knowdiff/planner.hpp"
#include "knowdiff/sim.hpp"

namespace knowdiff {

// Open-loop protocol: observe at 2 s, predict the following 8 s.
inline constexpr std::size_t kObservedFrame = 4;
inline constexpr double kOpenLoopLogSeconds = 10.0;
inline constexpr std::uint32_t kReportVersion = 1;

struct OpenLoopSample {
  std::string scenario;
  double ade = 0.0;
  double fde_3s = 0.0;
  double fde_5s = 0.0;
  double fde_8s = 0.0;
  bool miss = false;
  std::string decision;  // label, empty when the planner has none
  bool substituted = false;
  int denoiser_calls = 0;
  Trajectory pred;
  Trajectory gt;
};

struct OpenLoopReport {
  std::string planner;
  double ade_8s = 0.0;
  double fde_3s = 0.0;
  double fde_5s = 0.0;
  double fde_8s = 0.0;
  double miss_rate = 0.0;
  std::size_t sample_count = 0;
  std::size_t skipped = 0;
  std::size_t denoiser_calls = 0;
  std::vector<OpenLoopSample> samples;
};

// kIncompatible when logs disagree on dt or use a dt other than the
// planning step; short logs are skipped with a warning.
void CheckLogSet(const std::vector<DriveLog>& logs);

OpenLoopReport EvaluateOpenLoop(Planner& planner, const std::vector<DriveLog>& logs);

struct ClosedLoopSummary {
  std::string planner;
  bool reactive = false;
  double mean_score = 0.0;
  std::size_t collisions = 0;
  std::size_t drivable_violations = 0;
  std::size_t comfort_violations = 0;
  double mean_progress = 0.0;
  std::size_t failed = 0;
  std::vector<ClosedLoopReport> reports;
};

ClosedLoopSummary EvaluateClosedLoop(Planner& planner, const std::vector<DriveLog>& logs,
                                     const SimConfig& cfg);

nlohmann::json ToJson(const OpenLoopReport& r);
nlohmann::json ToJson(const ClosedLoopReport& r);
nlohmann::json ToJson(const ClosedLoopSummary& r);
OpenLoopReport OpenLoopFromJson(const nlohmann::json& j);
ClosedLoopSummary ClosedLoopFromJson(const nlohmann::json& j);

// Pretty JSON with a trailing newline; kIo on failure.
void WriteJsonFile(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

// Examples from every frame that has a full horizon of recorded future. The
// context carries the label classified from that future.
std::vector<TrainingSample> BuildTrainingSet(const std::vector<DriveLog>& logs);

}  // namespace knowdiff

#endif  // KNOWDIFF_EVALUATE_HPP_
