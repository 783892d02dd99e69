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

#include "knowdiff/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/error.hpp"

namespace knowdiff {

std::string_view AgentKindName(AgentKind kind) {
  switch (kind) {
    case AgentKind::kVehicle: return "vehicle";
    case AgentKind::kPedestrian: return "pedestrian";
    case AgentKind::kCyclist: return "cyclist";
  }
  return "unknown";
}

std::string_view SignalStateName(SignalState state) {
  switch (state) {
    case SignalState::kRed: return "red";
    case SignalState::kYellow: return "yellow";
    case SignalState::kGreen: return "green";
  }
  return "unknown";
}

void ValidateLanes(const std::vector<Lane>& lanes) {
  std::set<int> ids;
  for (const auto& lane : lanes) {
    if (!ids.insert(lane.id).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate lane id " + std::to_string(lane.id));
    }
    if (lane.centerline.size() < 2) {
      Fail(ErrorCode::kInvalidArgument, "lane " + std::to_string(lane.id) + " has < 2 points");
    }
  }
  for (const auto& lane : lanes) {
    for (int succ : lane.successors) {
      if (!ids.contains(succ)) {
        Fail(ErrorCode::kInvalidArgument, "lane " + std::to_string(lane.id) +
                                              " references missing successor " +
                                              std::to_string(succ));
      }
    }
  }
}

Polyline::Polyline(std::vector<Waypoint> points) : points_(std::move(points)) {
  cumulative_.reserve(points_.size());
  double s = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) {
      s += std::hypot(points_[i].x - points_[i - 1].x, points_[i].y - points_[i - 1].y);
    }
    cumulative_.push_back(s);
  }
}

Polyline::Projection Polyline::Project(const Waypoint& p) const {
  Projection best{0.0, 0.0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Waypoint& a = points_[i];
    const Waypoint& b = points_[i + 1];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 <= 0.0) continue;
    double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = a.x + t * dx;
    const double cy = a.y + t * dy;
    const double d = std::hypot(p.x - cx, p.y - cy);
    if (d < best.distance) {
      const double len = std::sqrt(len2);
      best.distance = d;
      best.s = cumulative_[i] + t * len;
      best.lateral = (dx * (p.y - a.y) - dy * (p.x - a.x)) / len;
    }
  }
  return best;
}

std::size_t Polyline::SegmentAt(double s) const {
  if (points_.size() < 2) Fail(ErrorCode::kInvalidArgument, "empty polyline");
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
  i = std::min(i, points_.size() - 2);
  // Skip zero-length segments so the direction is defined.
  while (i + 2 < points_.size() && cumulative_[i + 1] - cumulative_[i] <= 0.0) ++i;
  while (i > 0 && cumulative_[i + 1] - cumulative_[i] <= 0.0) --i;
  return i;
}

Waypoint Polyline::PointAt(double s) const {
  const std::size_t i = SegmentAt(s);
  const Waypoint& a = points_[i];
  const Waypoint& b = points_[i + 1];
  const double len = cumulative_[i + 1] - cumulative_[i];
  if (len <= 0.0) return a;
  const double t = (s - cumulative_[i]) / len;
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

double Polyline::HeadingAt(double s) const {
  const std::size_t i = SegmentAt(s);
  return std::atan2(points_[i + 1].y - points_[i].y, points_[i + 1].x - points_[i].x);
}

std::vector<std::size_t> RouteLaneOrder(const std::vector<Lane>& lanes) {
  std::map<int, std::size_t> route;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    if (lanes[i].on_route) route[lanes[i].id] = i;
  }
  std::vector<std::size_t> order;
  if (route.empty()) return order;
  std::set<int> has_predecessor;
  for (const auto& [id, idx] : route) {
    for (int succ : lanes[idx].successors) {
      if (route.contains(succ)) has_predecessor.insert(succ);
    }
  }
  std::optional<std::size_t> current;
  for (const auto& [id, idx] : route) {
    if (!has_predecessor.contains(id)) {
      current = idx;
      break;
    }
  }
  if (!current) current = route.begin()->second;  // cyclic route

  std::set<int> visited;
  while (current && visited.insert(lanes[*current].id).second) {
    order.push_back(*current);
    std::optional<std::size_t> next;
    for (int succ : lanes[*current].successors) {
      auto it = route.find(succ);
      if (it != route.end()) {
        next = it->second;
        break;
      }
    }
    current = next;
  }
  return order;
}

Polyline RoutePolyline(const std::vector<Lane>& lanes) {
  std::vector<Waypoint> points;
  for (std::size_t idx : RouteLaneOrder(lanes)) {
    for (const auto& p : lanes[idx].centerline) {
      if (!points.empty() && std::hypot(p.x - points.back().x, p.y - points.back().y) < 1e-6) {
        continue;
      }
      points.push_back(p);
    }
  }
  return Polyline(std::move(points));
}

Observation MakeObservation(double timestamp, const EgoState& ego,
                            const std::vector<AgentState>& agents,
                            const std::vector<Lane>& lanes,
                            const std::vector<SignalStatus>& signals) {
  Observation obs;
  obs.timestamp = timestamp;
  obs.ego = ego;
  obs.agents = agents;
  obs.lanes = lanes;
  const Polyline route = RoutePolyline(lanes);
  if (route.empty()) return obs;
  std::set<int> route_ids;
  for (const auto& lane : lanes) {
    if (lane.on_route) route_ids.insert(lane.id);
  }
  const double ego_s = route.Project({ego.x, ego.y}).s;
  for (const auto& sig : signals) {
    if (!route_ids.contains(sig.lane_id)) continue;
    const double d = route.Project({sig.x, sig.y}).s - ego_s;
    if (d < 0.0) continue;
    obs.signals.push_back({sig.lane_id, sig.state, d});
  }
  return obs;
}

Observation ObserveLogFrame(const DriveLog& log, std::size_t frame) {
  if (frame >= log.frames.size()) {
    Fail(ErrorCode::kInvalidArgument, "frame index out of range");
  }
  const LogFrame& f = log.frames[frame];
  return MakeObservation(log.dt * static_cast<double>(frame), f.ego, f.agents, log.lanes,
                         f.signals);
}

Trajectory LogEgoTrajectory(const DriveLog& log, std::size_t first,
                            std::size_t count, const EgoState& anchor) {
  if (first + count > log.frames.size()) {
    Fail(ErrorCode::kInvalidArgument, "log window exceeds recorded frames");
  }
  Trajectory out{{}, log.dt};
  out.points.reserve(count);
  for (std::size_t i = first; i < first + count; ++i) {
    const EgoState& e = log.frames[i].ego;
    out.points.push_back(ToEgoFrame(Waypoint{e.x, e.y}, anchor));
  }
  return out;
}

PoseTrajectory LogEgoPoses(const DriveLog& log, std::size_t first,
                           std::size_t count, const EgoState& anchor) {
  const Trajectory positions = LogEgoTrajectory(log, first, count, anchor);
  PoseTrajectory out{{}, log.dt};
  out.frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double rel = log.frames[first + i].ego.heading - anchor.heading;
    out.frames.push_back(
        {positions.points[i].x, positions.points[i].y, std::cos(rel), std::sin(rel)});
  }
  return out;
}

namespace {

constexpr char kDriveLogMagic[] = "KDLG";

void PutAgent(BinaryWriter& w, const AgentState& a) {
  w.PutI64(a.id);
  w.PutU32(static_cast<std::uint32_t>(a.kind));
  w.PutF64(a.x);
  w.PutF64(a.y);
  w.PutF64(a.heading);
  w.PutF64(a.speed);
  w.PutI64(a.lane_id);
}

AgentState GetAgent(BinaryReader& r) {
  AgentState a;
  a.id = static_cast<int>(r.GetI64());
  const auto kind = r.GetU32();
  if (kind > 2) Fail(ErrorCode::kInvalidArgument, "bad agent kind");
  a.kind = static_cast<AgentKind>(kind);
  a.x = r.GetF64();
  a.y = r.GetF64();
  a.heading = r.GetF64();
  a.speed = r.GetF64();
  a.lane_id = static_cast<int>(r.GetI64());
  return a;
}

}  // namespace

std::vector<std::uint8_t> SerializeDriveLog(const DriveLog& log) {
  BinaryWriter w;
  w.PutF64(log.dt);
  w.PutString(log.kind);
  w.PutU64(log.seed);
  w.PutI64(log.scripted_action);
  w.PutU64(log.lanes.size());
  for (const auto& lane : log.lanes) {
    w.PutI64(lane.id);
    w.PutU32(lane.on_route ? 1 : 0);
    w.PutU64(lane.successors.size());
    for (int s : lane.successors) w.PutI64(s);
    w.PutU64(lane.centerline.size());
    for (const auto& p : lane.centerline) {
      w.PutF64(p.x);
      w.PutF64(p.y);
    }
  }
  w.PutU64(log.frames.size());
  for (const auto& f : log.frames) {
    w.PutF64(f.ego.x);
    w.PutF64(f.ego.y);
    w.PutF64(f.ego.heading);
    w.PutF64(f.ego.speed);
    w.PutU64(f.agents.size());
    for (const auto& a : f.agents) PutAgent(w, a);
    w.PutU64(f.signals.size());
    for (const auto& s : f.signals) {
      w.PutI64(s.lane_id);
      w.PutU32(static_cast<std::uint32_t>(s.state));
      w.PutF64(s.x);
      w.PutF64(s.y);
    }
  }
  return SealContainer(kDriveLogMagic, kDriveLogVersion, w.bytes());
}

void SaveDriveLog(const DriveLog& log, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeDriveLog(log));
}

DriveLog LoadDriveLog(const std::filesystem::path& path) {
  const auto file = ReadFileBytes(path);
  const auto payload = OpenContainer(file, kDriveLogMagic, kDriveLogVersion);
  BinaryReader r(payload);
  DriveLog log;
  log.dt = r.GetF64();
  log.kind = r.GetString();
  log.seed = r.GetU64();
  log.scripted_action = static_cast<int>(r.GetI64());
  const auto lane_count = r.GetU64();
  for (std::uint64_t i = 0; i < lane_count; ++i) {
    Lane lane;
    lane.id = static_cast<int>(r.GetI64());
    lane.on_route = r.GetU32() != 0;
    const auto succ = r.GetU64();
    for (std::uint64_t k = 0; k < succ; ++k) lane.successors.push_back(static_cast<int>(r.GetI64()));
    const auto n = r.GetU64();
    for (std::uint64_t k = 0; k < n; ++k) {
      const double x = r.GetF64();
      const double y = r.GetF64();
      lane.centerline.push_back({x, y});
    }
    log.lanes.push_back(std::move(lane));
  }
  const auto frame_count = r.GetU64();
  for (std::uint64_t i = 0; i < frame_count; ++i) {
    LogFrame f;
    f.ego.x = r.GetF64();
    f.ego.y = r.GetF64();
    f.ego.heading = r.GetF64();
    f.ego.speed = r.GetF64();
    const auto agents = r.GetU64();
    for (std::uint64_t k = 0; k < agents; ++k) f.agents.push_back(GetAgent(r));
    const auto signals = r.GetU64();
    for (std::uint64_t k = 0; k < signals; ++k) {
      SignalStatus s;
      s.lane_id = static_cast<int>(r.GetI64());
      const auto state = r.GetU32();
      if (state > 2) Fail(ErrorCode::kInvalidArgument, "bad signal state");
      s.state = static_cast<SignalState>(state);
      s.x = r.GetF64();
      s.y = r.GetF64();
      f.signals.push_back(s);
    }
    log.frames.push_back(std::move(f));
  }
  r.ExpectEnd();
  if (!(log.dt > 0.0) || log.frames.size() < 2) {
    Fail(ErrorCode::kInvalidArgument, "drive log needs dt > 0 and at least 2 frames");
  }
  ValidateLanes(log.lanes);
  return log;
}

std::vector<DriveLog> LoadDriveLogDir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    Fail(ErrorCode::kIo, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".kdlog") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<DriveLog> logs;
  logs.reserve(files.size());
  for (const auto& f : files) logs.push_back(LoadDriveLog(f));
  return logs;
}

}  // namespace knowdiff
