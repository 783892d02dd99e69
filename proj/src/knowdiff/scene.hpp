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

// Scene description shared by the decision layer, the planners and the
// simulator: lanes, agents, signals, and recorded drive logs.

#ifndef KNOWDIFF_SCENE_HPP_
#define KNOWDIFF_SCENE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "knowdiff/trajectory.hpp"

namespace knowdiff {

enum class AgentKind { kVehicle, kPedestrian, kCyclist };
enum class SignalState { kRed, kYellow, kGreen };

std::string_view AgentKindName(AgentKind kind);
std::string_view SignalStateName(SignalState state);

inline constexpr double kLaneWidth = 3.5;

struct AgentState {
  int id = 0;
  AgentKind kind = AgentKind::kVehicle;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  int lane_id = -1;  // lane the agent drives along, -1 when free-moving
};

// World-frame lane centerline.
struct Lane {
  int id = 0;
  std::vector<Waypoint> centerline;
  std::vector<int> successors;
  bool on_route = false;
};

// Signal controlling the entry of `lane_id`; the stop line is at (x, y).
struct SignalStatus {
  int lane_id = 0;
  SignalState state = SignalState::kGreen;
  double x = 0.0;
  double y = 0.0;
};

struct SignalObservation {
  int lane_id = 0;
  SignalState state = SignalState::kGreen;
  double distance_m = 0.0;  // along the route, >= 0
};

struct Observation {
  double timestamp = 0.0;
  EgoState ego;
  std::vector<AgentState> agents;
  std::vector<Lane> lanes;
  std::vector<SignalObservation> signals;
};

// Throws kInvalidArgument when successor ids dangle or lanes are degenerate.
void ValidateLanes(const std::vector<Lane>& lanes);

// Arc-length parameterized polyline.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Waypoint> points);

  struct Projection {
    double s = 0.0;        // arc length of the closest point
    double lateral = 0.0;  // signed offset, left of travel positive
    double distance = 0.0;
  };

  bool empty() const { return points_.size() < 2; }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  const std::vector<Waypoint>& points() const { return points_; }

  Projection Project(const Waypoint& p) const;
  // Extrapolates linearly past either end.
  Waypoint PointAt(double s) const;
  double HeadingAt(double s) const;

 private:
  std::size_t SegmentAt(double s) const;
  std::vector<Waypoint> points_;
  std::vector<double> cumulative_;
};

// Indices of the on-route lanes, chained through their successor links.
std::vector<std::size_t> RouteLaneOrder(const std::vector<Lane>& lanes);
// Those lanes concatenated into one polyline.
Polyline RoutePolyline(const std::vector<Lane>& lanes);

// Frame of a drive log. Agents and signals are in world coordinates.
struct LogFrame {
  EgoState ego;
  std::vector<AgentState> agents;
  std::vector<SignalStatus> signals;
};

struct DriveLog {
  double dt = kStepSeconds;
  std::vector<LogFrame> frames;
  std::vector<Lane> lanes;
  std::string kind;       // generator family, e.g. "left_turn"
  std::uint64_t seed = 0;
  int scripted_action = -1;  // meta-action index the script realizes

  double duration() const {
    return frames.empty() ? 0.0 : dt * static_cast<double>(frames.size() - 1);
  }
};

// Observation of a recorded frame.
Observation ObserveLogFrame(const DriveLog& log, std::size_t frame);

// Observation for an arbitrary ego state over the given map and actors.
Observation MakeObservation(double timestamp, const EgoState& ego,
                            const std::vector<AgentState>& agents,
                            const std::vector<Lane>& lanes,
                            const std::vector<SignalStatus>& signals);

// Ego positions of frames [first, first + count) in the ego frame of `anchor`.
Trajectory LogEgoTrajectory(const DriveLog& log, std::size_t first,
                            std::size_t count, const EgoState& anchor);

// Same window with heading vectors.
PoseTrajectory LogEgoPoses(const DriveLog& log, std::size_t first,
                           std::size_t count, const EgoState& anchor);

inline constexpr std::uint32_t kDriveLogVersion = 1;

void SaveDriveLog(const DriveLog& log, const std::filesystem::path& path);
DriveLog LoadDriveLog(const std::filesystem::path& path);
std::vector<std::uint8_t> SerializeDriveLog(const DriveLog& log);

// Sorted *.kdlog files of a directory.
std::vector<DriveLog> LoadDriveLogDir(const std::filesystem::path& dir);

}  // namespace knowdiff

#endif  // KNOWDIFF_SCENE_HPP_
