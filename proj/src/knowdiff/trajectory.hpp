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

// Trajectory value types, ego-frame transforms and the summary features used
// to label driving segments.

#ifndef KNOWDIFF_TRAJECTORY_HPP_
#define KNOWDIFF_TRAJECTORY_HPP_

#include <cstddef>
#include <vector>

namespace knowdiff {

// Planning horizon shared by the library priors and the generator.
inline constexpr std::size_t kHorizon = 16;
inline constexpr double kStepSeconds = 0.5;

// Ego-frame position: x forward, y left, meters.
struct Waypoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

// Future positions sampled every `dt` seconds. Point k sits at time (k+1)*dt
// after the frame origin; the origin itself is implicit.
struct Trajectory {
  std::vector<Waypoint> points;
  double dt = kStepSeconds;

  std::size_t size() const { return points.size(); }
  bool IsFinite() const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// Position plus unit heading vector.
struct PoseFrame {
  double x = 0.0;
  double y = 0.0;
  double hx = 1.0;
  double hy = 0.0;

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

struct PoseTrajectory {
  std::vector<PoseFrame> frames;
  double dt = kStepSeconds;

  std::size_t size() const { return frames.size(); }
};

struct EgoState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians, (-pi, pi]
  double speed = 0.0;    // m/s, >= 0

  // Serialized as a single (x, y, cos, sin) frame when stacked with poses.
  PoseFrame AsFrame() const;
};

struct FeatureVector {
  double mean_speed = 0.0;         // m/s
  double mean_accel = 0.0;         // m/s^2, endpoint speed difference
  double heading_variation = 0.0;  // rad, total |d theta|
  double lateral_disp = 0.0;       // m, signed, left positive
  double heading_change = 0.0;     // rad, signed net change, left positive
  double final_speed = 0.0;        // m/s, speed over the last step
};

// Wraps into (-pi, pi].
double WrapAngle(double angle);

double MeanSpeed(const Trajectory& traj);
double HeadingVariation(const Trajectory& traj);
double MeanAccel(const Trajectory& traj);
FeatureVector ExtractFeatures(const Trajectory& traj);

// Rigid transform into the frame of `anchor`: anchor position maps to the
// origin, anchor heading to +x.
Waypoint ToEgoFrame(const Waypoint& p, const EgoState& anchor);
Waypoint FromEgoFrame(const Waypoint& p, const EgoState& anchor);
Trajectory ToEgoFrame(const Trajectory& traj, const EgoState& anchor);
Trajectory FromEgoFrame(const Trajectory& traj, const EgoState& anchor);

// Appends the canonical heading (1, 0) to every waypoint.
PoseTrajectory ExtendHeading(const Trajectory& traj);
// Channel slice back to 2D positions.
Trajectory Positions(const PoseTrajectory& poses);

}  // namespace knowdiff

#endif  // KNOWDIFF_TRAJECTORY_HPP_
