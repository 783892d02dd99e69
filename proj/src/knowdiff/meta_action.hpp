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

#ifndef KNOWDIFF_META_ACTION_HPP_
#define KNOWDIFF_META_ACTION_HPP_

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "knowdiff/trajectory.hpp"

namespace knowdiff {

enum class Direction {
  kGoStraight,
  kLeftTurn,
  kRightTurn,
  kUTurn,
  kLaneChangeLeft,
  kLaneChangeRight,
};

enum class SpeedProfile {
  kAccelerate,
  kCruise,
  kDecelerate,
  kBrake,
};

inline constexpr int kNumDirections = 6;
inline constexpr int kNumSpeedProfiles = 4;
inline constexpr int kNumMetaActions = kNumDirections * kNumSpeedProfiles;

// Discrete driving intent. The index is direction-major, speed-minor and is
// part of every on-disk format, so the enum order above is frozen.
struct MetaAction {
  Direction direction = Direction::kGoStraight;
  SpeedProfile speed = SpeedProfile::kCruise;

  int index() const {
    return static_cast<int>(direction) * kNumSpeedProfiles + static_cast<int>(speed);
  }
  static MetaAction FromIndex(int index);

  // "Direction|Speed", e.g. "LeftTurn|Decelerate".
  std::string Label() const;
  static std::optional<MetaAction> ParseLabel(std::string_view label);

  friend bool operator==(const MetaAction&, const MetaAction&) = default;
};

std::string_view DirectionName(Direction d);
std::string_view SpeedProfileName(SpeedProfile s);

// All 24 labels in index order.
const std::array<MetaAction, kNumMetaActions>& AllMetaActions();

// Rule-based labelling of a trajectory summary. Total and deterministic; the
// threshold gaps are closed by assigning the nearest region.
MetaAction Classify(const FeatureVector& features);

struct ClassifierThresholds {
  static constexpr double kUTurnDeg = 150.0;
  static constexpr double kTurnDeg = 15.0;
  static constexpr double kLaneKeepMaxY = 0.5;
  static constexpr double kLaneChangeMinY = 2.0;
  static constexpr double kLaneChangeMaxY = 4.0;
  static constexpr double kAccelMin = 0.5;
  static constexpr double kCruiseMaxAccel = 0.3;
  static constexpr double kStopSpeed = 0.5;
};

}  // namespace knowdiff

#endif  // KNOWDIFF_META_ACTION_HPP_
