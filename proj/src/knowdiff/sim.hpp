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

// Closed-loop kinematic simulation with periodic replanning.

#ifndef KNOWDIFF_SIM_HPP_
#define KNOWDIFF_SIM_HPP_

#include <string>
#include <vector>

#include "knowdiff/planner.hpp"
#include "knowdiff/scene.hpp"

namespace knowdiff {

struct BicycleParams {
  double wheelbase = 2.7;
  double accel_min = -4.0;
  double accel_max = 3.0;
  double steer_max = 0.6;
};

// Explicit Euler step; inputs are clamped to the limits, speed stays >= 0.
EgoState BicycleStep(const EgoState& s, double accel, double steer, double dt,
                     const BicycleParams& p = {});

struct IdmParams {
  double time_headway = 1.5;  // s
  double max_accel = 1.5;     // m/s^2
  double comfort_decel = 2.0; // m/s^2
  double min_gap = 2.0;       // m, bumper to bumper
  double vehicle_length = 4.0;
  double max_decel = 9.0;
};

// Intelligent-driver acceleration for speed `v`, desired speed `v_des`,
// leader gap (centre distance) and leader speed. `gap` < 0 means no leader.
double IdmAccel(double v, double v_des, double gap, double leader_v, const IdmParams& p = {});

inline constexpr double kCollisionRadius = 1.2;

struct SimConfig {
  double sim_dt = 0.1;
  double replan_hz = 2.0;
  bool reactive = false;
  double horizon_s = 0.0;  // 0 runs the full log
  double lookahead_gain = 0.4;
  double speed_gain = 1.5;
  double along_track_gain = 0.5;
  double jerk_limit = 4.0;  // m/s^3, controller rate limit
  double comfort_accel = 3.0;
  double comfort_jerk = 5.0;
  double drivable_half_width = kLaneWidth / 2.0;
  bool record_trace = false;
};

struct TraceRow {
  double t = 0.0;
  EgoState ego;
  double accel = 0.0;
  double steer = 0.0;
  std::vector<AgentState> agents;
};

struct ClosedLoopReport {
  std::string scenario;
  double score = 0.0;
  std::size_t collisions = 0;
  std::size_t drivable_violations = 0;
  double progress_ratio = 0.0;
  std::size_t comfort_violations = 0;
  double comfort_ok_fraction = 1.0;
  bool reactive = false;
  bool planner_failed = false;
  std::string diagnostic;
  std::vector<TraceRow> trace;
};

// Composite score in [0, 100].
double ClosedLoopScore(bool collided, double progress_ratio, double comfort_ok_fraction,
                       bool drivable_violation);

ClosedLoopReport RolloutClosedLoop(Planner& planner, const DriveLog& log, const SimConfig& cfg);

void WriteTraceCsv(const ClosedLoopReport& report, const std::string& path);

}  // namespace knowdiff

#endif  // KNOWDIFF_SIM_HPP_
