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

// Scripted synthetic drive logs, one maneuver family per log.

#ifndef KNOWDIFF_GENERATOR_HPP_
#define KNOWDIFF_GENERATOR_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "knowdiff/scene.hpp"

namespace knowdiff {

inline constexpr std::array<std::string_view, 6> kScenarioKinds = {
    "straight", "left_turn", "right_turn", "u_turn", "lane_change_left", "lane_change_right"};

struct GeneratorConfig {
  std::size_t count = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> kinds;  // empty selects every kind
  double duration_s = 10.0;
};

// Log i cycles through the selected kinds and, within a kind, through the
// four speed profiles. kConfig for unknown kinds, kInvalidArgument for
// count == 0.
std::vector<DriveLog> GenerateScenarios(const GeneratorConfig& cfg);

// One scenario, addressable on its own.
DriveLog GenerateScenario(std::string_view kind, int speed_profile, std::uint64_t seed,
                          double duration_s = 10.0);

// Label histogram of the 8 s library windows over a log set.
std::map<int, std::size_t> LabelCoverage(const std::vector<DriveLog>& logs);

}  // namespace knowdiff

#endif  // KNOWDIFF_GENERATOR_HPP_
