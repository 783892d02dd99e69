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

#include "knowdiff/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "knowdiff/error.hpp"
#include "knowdiff/library.hpp"
#include "knowdiff/meta_action.hpp"

namespace knowdiff {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPathBehind = 60.0;  // m of path behind the start
constexpr double kPathStep = 0.25;
constexpr double kLaneSample = 2.0;
constexpr double kNoiseSigma = 0.05;
constexpr double kNoiseBound = 0.1;
constexpr double kManeuverStart = 3.0;  // s
constexpr double kManeuverEnd = 7.5;    // s
constexpr double kTurnReach = 30.0;     // maneuver starts within this distance of the t = 2 s pose
constexpr double kObserveTime = 2.0;
constexpr double kHardBrake = 2.8;      // m/s^2
constexpr double kFollowerDelay = 1.5;  // s
constexpr double kFollowerGap = 8.0;    // m
constexpr double kLeadAdvance = 0.75;   // s
constexpr double kLeadGap = 3.5;        // m

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Piecewise-constant acceleration; speed never drops below zero.
struct Motion {
  double v0 = 0.0;
  std::vector<std::pair<double, double>> phases;  // (start time, accel), first at 0

  void Eval(double t, double* s_out, double* v_out) const {
    if (t <= 0.0) {
      *s_out = v0 * t;
      *v_out = v0;
      return;
    }
    double s = 0.0;
    double v = v0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      const double ta = phases[i].first;
      if (t <= ta) break;
      const double tb = i + 1 < phases.size() ? std::min(t, phases[i + 1].first) : t;
      const double a = phases[i].second;
      const double d = tb - ta;
      if (a < 0.0 && v + a * d < 0.0) {
        s += v * v / (-2.0 * a);
        v = 0.0;
      } else {
        s += v * d + 0.5 * a * d * d;
        v += a * d;
      }
    }
    *s_out = s;
    *v_out = v;
  }
  double Distance(double t) const {
    double s, v;
    Eval(t, &s, &v);
    return s;
  }
  double Speed(double t) const {
    double s, v;
    Eval(t, &s, &v);
    return v;
  }
};

struct Geometry {
  enum class Shape { kStraight, kArc, kShift } shape = Shape::kStraight;
  double start = 0.0;  // path arc length where the maneuver begins
  double angle = 0.0;  // arc: signed heading change
  double radius = 0.0;
  double length = 0.0;  // arc or shift length
  double offset = 0.0;  // shift: signed lateral displacement

  double ManeuverLength() const { return shape == Shape::kArc ? radius * std::abs(angle) : length; }
};

struct Pose {
  double x, y, h;
};

// Noise-free centerline samples from -kPathBehind to `end`.
std::vector<Pose> NominalPath(const Geometry& g, double end) {
  std::vector<Pose> out;
  const auto n = static_cast<std::size_t>(std::ceil((end + kPathBehind) / kPathStep)) + 1;
  out.reserve(n);
  if (g.shape == Geometry::Shape::kShift) {
    for (std::size_t i = 0; i < n; ++i) {
      const double s = -kPathBehind + kPathStep * static_cast<double>(i);
      double y = 0.0;
      double slope = 0.0;
      if (s >= g.start + g.length) {
        y = g.offset;
      } else if (s > g.start) {
        const double u = (s - g.start) / g.length;
        y = 0.5 * g.offset * (1.0 - std::cos(kPi * u));
        slope = 0.5 * g.offset * kPi / g.length * std::sin(kPi * u);
      }
      out.push_back({s, y, std::atan(slope)});
    }
    return out;
  }
  const double curvature =
      g.shape == Geometry::Shape::kArc ? g.angle / (g.radius * std::abs(g.angle)) : 0.0;
  const double arc_end = g.start + g.ManeuverLength();
  Pose p{-kPathBehind, 0.0, 0.0};
  out.push_back(p);
  for (std::size_t i = 1; i < n; ++i) {
    const double s0 = -kPathBehind + kPathStep * static_cast<double>(i - 1);
    const double s1 = s0 + kPathStep;
    // Curvature integrated exactly over the overlap with the arc.
    const double overlap =
        g.shape == Geometry::Shape::kArc ? std::max(0.0, std::min(s1, arc_end) - std::max(s0, g.start)) : 0.0;
    const double dh = curvature * overlap;
    const double h_mid = p.h + 0.5 * dh;
    p.x += kPathStep * std::cos(h_mid);
    p.y += kPathStep * std::sin(h_mid);
    p.h += dh;
    out.push_back(p);
  }
  return out;
}

std::vector<Waypoint> Sample(const std::vector<Pose>& path, double from, double to) {
  std::vector<Waypoint> pts;
  const auto stride = static_cast<std::size_t>(std::lround(kLaneSample / kPathStep));
  const auto i0 = static_cast<std::size_t>(std::max(0.0, std::round((from + kPathBehind) / kPathStep)));
  const auto i1 = std::min(path.size() - 1,
                           static_cast<std::size_t>(std::round((to + kPathBehind) / kPathStep)));
  for (std::size_t i = i0; i < i1; i += stride) pts.push_back({path[i].x, path[i].y});
  pts.push_back({path[i1].x, path[i1].y});
  return pts;
}

std::vector<Waypoint> StraightLine(Waypoint a, Waypoint b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / kLaneSample)));
  std::vector<Waypoint> pts;
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    pts.push_back({a.x + u * (b.x - a.x), a.y + u * (b.y - a.y)});
  }
  return pts;
}

struct Rng {
  std::mt19937_64 engine;
  double Uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine); }
};

Direction KindDirection(std::string_view kind) {
  if (kind == "straight") return Direction::kGoStraight;
  if (kind == "left_turn") return Direction::kLeftTurn;
  if (kind == "right_turn") return Direction::kRightTurn;
  if (kind == "u_turn") return Direction::kUTurn;
  if (kind == "lane_change_left") return Direction::kLaneChangeLeft;
  if (kind == "lane_change_right") return Direction::kLaneChangeRight;
  Fail(ErrorCode::kConfig, "unknown scenario kind '" + std::string(kind) + "'");
}

Motion SampleMotion(Direction dir, SpeedProfile profile, Rng& rng) {
  Motion m;
  const bool uturn = dir == Direction::kUTurn;
  switch (profile) {
    case SpeedProfile::kAccelerate:
      m.v0 = rng.Uniform(3.0, 6.5);
      m.phases = {{0.0, rng.Uniform(0.8, 1.5)}};
      break;
    case SpeedProfile::kCruise:
      m.v0 = uturn ? rng.Uniform(7.5, 10.0) : rng.Uniform(7.5, 15.0);
      m.phases = {{0.0, 0.0}};
      break;
    case SpeedProfile::kDecelerate:
      m.v0 = rng.Uniform(12.0, 15.0);
      m.phases = {{0.0, -rng.Uniform(0.7, 1.0)}};
      break;
    case SpeedProfile::kBrake:
      if (dir == Direction::kGoStraight) {
        // Late firm stop at a red light, starting inside the stopping
        // distance a rule-based driver would check at t = 2 s.
        m.v0 = rng.Uniform(6.0, 11.0);
        const double slack = 4.0 - m.v0 * m.v0 * (1.0 / (2.0 * kHardBrake) - 1.0 / 6.0);
        const double t_brake = kObserveTime + rng.Uniform(0.1, 0.8) * slack / m.v0;
        m.phases = {{0.0, 0.0}, {t_brake, -kHardBrake}};
      } else {
        m.v0 = uturn ? rng.Uniform(14.0, 16.0) : rng.Uniform(8.0, 14.0);
        const double t_stop = uturn ? kManeuverEnd : rng.Uniform(6.5, kManeuverEnd);
        m.phases = {{0.0, -m.v0 / t_stop}};
      }
      break;
  }
  return m;
}

// Places the maneuver inside [3.0, 7.5] s and within reach of the t = 2 s
// pose. False when the sampled motion cannot host it.
bool PlaceManeuver(Direction dir, const Motion& m, Rng& rng, Geometry* g) {
  const double s2 = m.Distance(kObserveTime);
  const double s3 = m.Distance(kManeuverStart);
  const double s_end = m.Distance(kManeuverEnd);
  switch (dir) {
    case Direction::kGoStraight:
      g->shape = Geometry::Shape::kStraight;
      return true;
    case Direction::kLeftTurn:
    case Direction::kRightTurn:
    case Direction::kUTurn: {
      g->shape = Geometry::Shape::kArc;
      const bool u = dir == Direction::kUTurn;
      const double mag = u ? kPi : rng.Uniform(60.0, 100.0) * kPi / 180.0;
      g->angle = dir == Direction::kRightTurn ? -mag : mag;
      const double r_min = u ? 6.0 : 8.0;
      g->radius = u ? rng.Uniform(6.0, 9.0) : rng.Uniform(10.0, 20.0);
      g->radius = std::min(g->radius, (s_end - s3) / mag);
      if (g->radius < r_min) return false;
      break;
    }
    case Direction::kLaneChangeLeft:
    case Direction::kLaneChangeRight:
      g->shape = Geometry::Shape::kShift;
      g->offset = dir == Direction::kLaneChangeLeft ? kLaneWidth : -kLaneWidth;
      g->length = std::min(rng.Uniform(25.0, 45.0), s_end - s3);
      if (g->length < 15.0) return false;
      break;
  }
  const double lo = s3;
  const double hi = std::min(s2 + kTurnReach, s_end - g->ManeuverLength());
  if (hi < lo) return false;
  g->start = lo + rng.Uniform(0.0, 1.0) * (hi - lo);
  return true;
}

void Transform(double c, double s, double tx, double ty, double* x, double* y) {
  const double px = *x;
  const double py = *y;
  *x = c * px - s * py + tx;
  *y = s * px + c * py + ty;
}

}  // namespace

DriveLog GenerateScenario(std::string_view kind, int speed_profile, std::uint64_t seed,
                          double duration_s) {
  const Direction dir = KindDirection(kind);
  if (speed_profile < 0 || speed_profile >= kNumSpeedProfiles) {
    Fail(ErrorCode::kConfig, "speed profile index out of range");
  }
  if (!(duration_s >= 2.0 * kStepSeconds)) Fail(ErrorCode::kConfig, "duration too short");
  const auto profile = static_cast<SpeedProfile>(speed_profile);
  Rng rng{std::mt19937_64(seed)};

  Motion motion;
  Geometry geom;
  bool placed = false;
  for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
    motion = SampleMotion(dir, profile, rng);
    placed = PlaceManeuver(dir, motion, rng, &geom);
  }
  if (!placed) Fail(ErrorCode::kInternal, "could not place maneuver for " + std::string(kind));

  const double path_end = motion.Distance(duration_s) + 150.0;
  const std::vector<Pose> nominal = NominalPath(geom, path_end);

  // Smooth lateral noise as a function of arc length.
  std::array<double, 3> period{}, phase{};
  for (std::size_t i = 0; i < 3; ++i) {
    period[i] = rng.Uniform(400.0, 900.0);
    phase[i] = rng.Uniform(0.0, 2.0 * kPi);
  }
  const double amp = kNoiseSigma * std::sqrt(2.0 / 3.0);
  std::vector<Waypoint> noisy;
  noisy.reserve(nominal.size());
  for (std::size_t i = 0; i < nominal.size(); ++i) {
    const double s = -kPathBehind + kPathStep * static_cast<double>(i);
    double n = 0.0;
    for (std::size_t k = 0; k < 3; ++k) n += amp * std::sin(2.0 * kPi * s / period[k] + phase[k]);
    n = std::clamp(n, -kNoiseBound, kNoiseBound);
    noisy.push_back({nominal[i].x - n * std::sin(nominal[i].h), nominal[i].y + n * std::cos(nominal[i].h)});
  }
  const Polyline path(noisy);
  double origin = 0.0;
  const auto origin_index = static_cast<std::size_t>(std::lround(kPathBehind / kPathStep));
  for (std::size_t i = 1; i <= origin_index; ++i) {
    origin += std::hypot(noisy[i].x - noisy[i - 1].x, noisy[i].y - noisy[i - 1].y);
  }

  DriveLog log;
  log.dt = kStepSeconds;
  log.kind = std::string(kind);
  log.seed = seed;
  log.scripted_action = MetaAction{dir, profile}.index();

  // Map.
  const double opposite_y = dir == Direction::kLaneChangeLeft ? 2.0 * kLaneWidth : kLaneWidth;
  int signal_lane = 0;
  if (geom.shape == Geometry::Shape::kArc) {
    const Pose at = nominal[static_cast<std::size_t>(std::lround((geom.start + kPathBehind) / kPathStep))];
    log.lanes.push_back({0, Sample(nominal, -kPathBehind, geom.start), {1, 2}, true});
    log.lanes.push_back({1, Sample(nominal, geom.start, path_end), {}, true});
    log.lanes.push_back({2, StraightLine({at.x, at.y}, {at.x + 80.0, at.y}), {}, false});
    log.lanes.push_back({3, StraightLine({geom.start + 10.0, opposite_y}, {-kPathBehind, opposite_y}), {}, false});
    signal_lane = 1;
  } else if (geom.shape == Geometry::Shape::kShift) {
    log.lanes.push_back({0, StraightLine({-kPathBehind, 0.0}, {path_end, 0.0}), {}, false});
    log.lanes.push_back({1, StraightLine({-kPathBehind, geom.offset}, {path_end, geom.offset}), {}, true});
    log.lanes.push_back({2, StraightLine({path_end, opposite_y}, {-kPathBehind, opposite_y}), {}, false});
    signal_lane = 1;
  } else {
    log.lanes.push_back({0, StraightLine({-kPathBehind, 0.0}, {path_end, 0.0}), {}, true});
    log.lanes.push_back({1, StraightLine({path_end, opposite_y}, {-kPathBehind, opposite_y}), {}, false});
  }
  const int opposite_lane = log.lanes.back().id;

  std::vector<SignalStatus> signals;
  if (profile == SpeedProfile::kBrake) {
    const double stop = motion.Distance(1e6);
    const Waypoint line = path.PointAt(origin + stop + 1.0);
    signals.push_back({signal_lane, SignalState::kRed, line.x, line.y});
  }

  const double oncoming_x = rng.Uniform(10.0, 25.0);
  const double oncoming_v = rng.Uniform(8.0, 12.0);
  const double pedestrian_x = rng.Uniform(-25.0, -12.0);

  auto on_path = [&](double s, double v, int id, int lane) {
    const Waypoint p = path.PointAt(origin + s);
    return AgentState{id, AgentKind::kVehicle, p.x, p.y, path.HeadingAt(origin + s), v, lane};
  };

  const auto frames = static_cast<std::size_t>(std::lround(duration_s / log.dt)) + 1;
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = log.dt * static_cast<double>(k);
    LogFrame f;
    const double s = motion.Distance(t);
    const Waypoint p = path.PointAt(origin + s);
    f.ego = {p.x, p.y, path.HeadingAt(origin + s), motion.Speed(t)};
    f.agents.push_back(on_path(motion.Distance(t - kFollowerDelay) - kFollowerGap,
                               motion.Speed(t - kFollowerDelay), 1, 0));
    if (dir == Direction::kGoStraight && profile == SpeedProfile::kDecelerate) {
      f.agents.push_back(on_path(motion.Distance(t + kLeadAdvance) + kLeadGap,
                                 motion.Speed(t + kLeadAdvance), 2, 0));
    }
    f.agents.push_back({3, AgentKind::kVehicle, oncoming_x - oncoming_v * t, opposite_y, kPi,
                        oncoming_v, opposite_lane});
    f.agents.push_back({4, AgentKind::kPedestrian, pedestrian_x - 1.2 * t, -4.5, kPi, 1.2, -1});
    f.signals = signals;
    log.frames.push_back(std::move(f));
  }

  // Random global placement.
  const double theta = rng.Uniform(-kPi, kPi);
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  const double tx = rng.Uniform(-200.0, 200.0);
  const double ty = rng.Uniform(-200.0, 200.0);
  for (auto& lane : log.lanes) {
    for (auto& q : lane.centerline) Transform(c, sn, tx, ty, &q.x, &q.y);
  }
  for (auto& f : log.frames) {
    Transform(c, sn, tx, ty, &f.ego.x, &f.ego.y);
    f.ego.heading = WrapAngle(f.ego.heading + theta);
    for (auto& a : f.agents) {
      Transform(c, sn, tx, ty, &a.x, &a.y);
      a.heading = WrapAngle(a.heading + theta);
    }
    for (auto& sg : f.signals) Transform(c, sn, tx, ty, &sg.x, &sg.y);
  }
  ValidateLanes(log.lanes);
  return log;
}

std::vector<DriveLog> GenerateScenarios(const GeneratorConfig& cfg) {
  if (cfg.count == 0) Fail(ErrorCode::kInvalidArgument, "count must be >= 1");
  std::vector<std::string> kinds = cfg.kinds;
  if (kinds.empty()) kinds.assign(kScenarioKinds.begin(), kScenarioKinds.end());
  for (const auto& k : kinds) KindDirection(k);
  std::vector<DriveLog> logs;
  logs.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::string& kind = kinds[i % kinds.size()];
    const int profile = static_cast<int>((i / kinds.size()) % kNumSpeedProfiles);
    logs.push_back(GenerateScenario(kind, profile, SplitMix64(cfg.seed * 0x100000001b3ull + i),
                                    cfg.duration_s));
  }
  return logs;
}

std::map<int, std::size_t> LabelCoverage(const std::vector<DriveLog>& logs) {
  std::map<int, std::size_t> counts;
  for (const auto& log : logs) {
    for (const auto& seg : SegmentLog(log, static_cast<double>(kHorizon) * kStepSeconds)) {
      ++counts[Classify(ExtractFeatures(seg)).index()];
    }
  }
  return counts;
}

}  // namespace knowdiff
