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

#include "knowdiff/meta_action.hpp"

#include <cmath>
#include <numbers>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr std::array<std::string_view, kNumDirections> kDirectionNames = {
    "GoStraight", "LeftTurn", "RightTurn", "UTurn", "LaneChangeLeft", "LaneChangeRight"};
constexpr std::array<std::string_view, kNumSpeedProfiles> kSpeedNames = {
    "Accelerate", "Cruise", "Decelerate", "Brake"};

double Degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

Direction ClassifyDirection(const FeatureVector& f) {
  using T = ClassifierThresholds;
  const double turn_deg = std::abs(Degrees(f.heading_change));
  if (turn_deg > T::kUTurnDeg) return Direction::kUTurn;
  if (turn_deg > T::kTurnDeg) {
    return f.heading_change > 0.0 ? Direction::kLeftTurn : Direction::kRightTurn;
  }
  const double dy = std::abs(f.lateral_disp);
  const Direction lane_change =
      f.lateral_disp > 0.0 ? Direction::kLaneChangeLeft : Direction::kLaneChangeRight;
  if (dy < T::kLaneKeepMaxY) return Direction::kGoStraight;
  if (dy > T::kLaneChangeMinY) return lane_change;
  // Gap between lane keeping and lane change: nearest boundary wins, ties go
  // to the lane change.
  const double to_keep = dy - T::kLaneKeepMaxY;
  const double to_change = T::kLaneChangeMinY - dy;
  return to_keep < to_change ? Direction::kGoStraight : lane_change;
}

SpeedProfile ClassifySpeed(const FeatureVector& f) {
  using T = ClassifierThresholds;
  const double a = f.mean_accel;
  if (f.final_speed < T::kStopSpeed && a < -T::kAccelMin) return SpeedProfile::kBrake;
  if (a > T::kAccelMin) return SpeedProfile::kAccelerate;
  if (a < -T::kAccelMin) return SpeedProfile::kDecelerate;
  if (std::abs(a) < T::kCruiseMaxAccel) return SpeedProfile::kCruise;
  const double midpoint = 0.5 * (T::kCruiseMaxAccel + T::kAccelMin);
  if (std::abs(a) < midpoint) return SpeedProfile::kCruise;
  return a > 0.0 ? SpeedProfile::kAccelerate : SpeedProfile::kDecelerate;
}

}  // namespace

MetaAction MetaAction::FromIndex(int index) {
  if (index < 0 || index >= kNumMetaActions) {
    Fail(ErrorCode::kInvalidArgument, "meta-action index out of range: " + std::to_string(index));
  }
  return {static_cast<Direction>(index / kNumSpeedProfiles),
          static_cast<SpeedProfile>(index % kNumSpeedProfiles)};
}

std::string MetaAction::Label() const {
  std::string out(DirectionName(direction));
  out += '|';
  out += SpeedProfileName(speed);
  return out;
}

std::optional<MetaAction> MetaAction::ParseLabel(std::string_view label) {
  const auto bar = label.find('|');
  if (bar == std::string_view::npos) return std::nullopt;
  const auto dir = label.substr(0, bar);
  const auto spd = label.substr(bar + 1);
  MetaAction out;
  bool found_dir = false;
  bool found_spd = false;
  for (int i = 0; i < kNumDirections; ++i) {
    if (kDirectionNames[i] == dir) {
      out.direction = static_cast<Direction>(i);
      found_dir = true;
    }
  }
  for (int i = 0; i < kNumSpeedProfiles; ++i) {
    if (kSpeedNames[i] == spd) {
      out.speed = static_cast<SpeedProfile>(i);
      found_spd = true;
    }
  }
  if (!found_dir || !found_spd) return std::nullopt;
  return out;
}

std::string_view DirectionName(Direction d) { return kDirectionNames[static_cast<int>(d)]; }
std::string_view SpeedProfileName(SpeedProfile s) { return kSpeedNames[static_cast<int>(s)]; }

const std::array<MetaAction, kNumMetaActions>& AllMetaActions() {
  static const auto all = [] {
    std::array<MetaAction, kNumMetaActions> out{};
    for (int i = 0; i < kNumMetaActions; ++i) out[i] = MetaAction::FromIndex(i);
    return out;
  }();
  return all;
}

MetaAction Classify(const FeatureVector& features) {
  return {ClassifyDirection(features), ClassifySpeed(features)};
}

}  // namespace knowdiff
