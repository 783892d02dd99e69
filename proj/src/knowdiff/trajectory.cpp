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

#include "knowdiff/trajectory.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

void RequirePoints(const Trajectory& traj, std::size_t min_points,
                   const char* op) {
  if (traj.size() < min_points) {
    Fail(ErrorCode::kDegenerateTrajectory,
         std::string(op) + ": need at least " + std::to_string(min_points) +
             " points, got " + std::to_string(traj.size()));
  }
  if (!(traj.dt > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, std::string(op) + ": dt must be > 0");
  }
}

double Distance(const Waypoint& a, const Waypoint& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

// Per-segment orientation; zero-length segments inherit the previous heading
// and leading zero-length segments stay empty.
constexpr double kStationaryStep = 1e-6;  // m

std::vector<std::optional<double>> SegmentHeadings(const Trajectory& traj) {
  std::vector<std::optional<double>> headings(traj.size() - 1);
  std::optional<double> previous;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    const Waypoint& a = traj.points[i];
    const Waypoint& b = traj.points[i + 1];
    // Sub-micron steps carry no usable direction.
    if (std::hypot(b.x - a.x, b.y - a.y) > kStationaryStep) {
      previous = std::atan2(b.y - a.y, b.x - a.x);
    }
    headings[i] = previous;
  }
  return headings;
}

}  // namespace

bool Trajectory::IsFinite() const {
  if (!std::isfinite(dt)) return false;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  }
  return true;
}

PoseFrame EgoState::AsFrame() const {
  return {x, y, std::cos(heading), std::sin(heading)};
}

double WrapAngle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

double MeanSpeed(const Trajectory& traj) {
  RequirePoints(traj, 2, "MeanSpeed");
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    total += Distance(traj.points[i], traj.points[i + 1]) / traj.dt;
  }
  return total / static_cast<double>(traj.size() - 1);
}

double HeadingVariation(const Trajectory& traj) {
  RequirePoints(traj, 3, "HeadingVariation");
  const auto headings = SegmentHeadings(traj);
  double total = 0.0;
  for (std::size_t i = 1; i < headings.size(); ++i) {
    if (headings[i] && headings[i - 1]) {
      total += std::abs(WrapAngle(*headings[i] - *headings[i - 1]));
    }
  }
  return total;
}

double MeanAccel(const Trajectory& traj) {
  RequirePoints(traj, 3, "MeanAccel");
  const std::size_t n = traj.size();
  const double v_first = Distance(traj.points[0], traj.points[1]) / traj.dt;
  const double v_last = Distance(traj.points[n - 2], traj.points[n - 1]) / traj.dt;
  return (v_last - v_first) / (static_cast<double>(n - 2) * traj.dt);
}

FeatureVector ExtractFeatures(const Trajectory& traj) {
  RequirePoints(traj, 3, "ExtractFeatures");
  FeatureVector f;
  f.mean_speed = MeanSpeed(traj);
  f.mean_accel = MeanAccel(traj);
  f.heading_variation = HeadingVariation(traj);

  const std::size_t n = traj.size();
  f.final_speed = Distance(traj.points[n - 2], traj.points[n - 1]) / traj.dt;

  const auto headings = SegmentHeadings(traj);
  std::optional<double> first;
  for (const auto& h : headings) {
    if (h) {
      first = h;
      break;
    }
  }
  if (!first) return f;  // stationary: no direction information

  const double c = std::cos(*first);
  const double s = std::sin(*first);
  const double dx = traj.points[n - 1].x - traj.points[0].x;
  const double dy = traj.points[n - 1].y - traj.points[0].y;
  f.lateral_disp = -s * dx + c * dy;
  f.heading_change = WrapAngle(*headings.back() - *first);
  return f;
}

Waypoint ToEgoFrame(const Waypoint& p, const EgoState& anchor) {
  const double c = std::cos(anchor.heading);
  const double s = std::sin(anchor.heading);
  const double dx = p.x - anchor.x;
  const double dy = p.y - anchor.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Waypoint FromEgoFrame(const Waypoint& p, const EgoState& anchor) {
  const double c = std::cos(anchor.heading);
  const double s = std::sin(anchor.heading);
  return {anchor.x + c * p.x - s * p.y, anchor.y + s * p.x + c * p.y};
}

Trajectory ToEgoFrame(const Trajectory& traj, const EgoState& anchor) {
  Trajectory out{{}, traj.dt};
  out.points.reserve(traj.size());
  for (const auto& p : traj.points) out.points.push_back(ToEgoFrame(p, anchor));
  return out;
}

Trajectory FromEgoFrame(const Trajectory& traj, const EgoState& anchor) {
  Trajectory out{{}, traj.dt};
  out.points.reserve(traj.size());
  for (const auto& p : traj.points) out.points.push_back(FromEgoFrame(p, anchor));
  return out;
}

PoseTrajectory ExtendHeading(const Trajectory& traj) {
  PoseTrajectory out{{}, traj.dt};
  out.frames.reserve(traj.size());
  for (const auto& p : traj.points) out.frames.push_back({p.x, p.y, 1.0, 0.0});
  return out;
}

Trajectory Positions(const PoseTrajectory& poses) {
  Trajectory out{{}, poses.dt};
  out.points.reserve(poses.size());
  for (const auto& f : poses.frames) out.points.push_back({f.x, f.y});
  return out;
}

}  // namespace knowdiff
