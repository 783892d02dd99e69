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

#include "knowdiff/sim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr double kPathExtension = 200.0;
constexpr double kLeaderCorridor = 2.0;  // m either side of an agent's path
constexpr double kMinLookahead = 3.0;
constexpr double kMaxLookahead = 10.0;

// Agent pose at `time`, interpolated between log frames.
std::vector<AgentState> ReplayAgents(const DriveLog& log, double time) {
  const double u = std::clamp(time / log.dt, 0.0, static_cast<double>(log.frames.size() - 1));
  const auto k = std::min(static_cast<std::size_t>(u), log.frames.size() - 2);
  const double w = u - static_cast<double>(k);
  const auto& fa = log.frames[k].agents;
  const auto& fb = log.frames[k + 1].agents;
  std::vector<AgentState> out;
  for (const auto& a : fa) {
    auto it = std::find_if(fb.begin(), fb.end(), [&](const AgentState& b) { return b.id == a.id; });
    if (it == fb.end()) {
      out.push_back(a);
      continue;
    }
    AgentState s = a;
    s.x = a.x + w * (it->x - a.x);
    s.y = a.y + w * (it->y - a.y);
    s.heading = WrapAngle(a.heading + w * WrapAngle(it->heading - a.heading));
    s.speed = a.speed + w * (it->speed - a.speed);
    out.push_back(s);
  }
  // Past the recording: constant velocity.
  const double beyond = time - log.duration();
  if (beyond > 0.0) {
    for (auto& s : out) {
      s.x += s.speed * std::cos(s.heading) * beyond;
      s.y += s.speed * std::sin(s.heading) * beyond;
    }
  }
  return out;
}

struct ReactiveAgent {
  AgentState state;
  Polyline path;
  double s = 0.0;
  double v_des = 0.0;
  bool replay = false;  // pedestrians keep their recording
};

std::vector<ReactiveAgent> InitReactive(const DriveLog& log) {
  std::vector<ReactiveAgent> out;
  for (const auto& a0 : log.frames.front().agents) {
    ReactiveAgent r;
    r.state = a0;
    if (a0.kind != AgentKind::kVehicle) {
      r.replay = true;
      out.push_back(r);
      continue;
    }
    std::vector<Waypoint> pts;
    double vmax = 0.0;
    for (const auto& f : log.frames) {
      for (const auto& a : f.agents) {
        if (a.id != a0.id) continue;
        vmax = std::max(vmax, a.speed);
        if (pts.empty() || std::hypot(a.x - pts.back().x, a.y - pts.back().y) > 0.05) {
          pts.push_back({a.x, a.y});
        }
      }
    }
    const AgentState& last = [&]() -> const AgentState& {
      for (const auto& a : log.frames.back().agents) {
        if (a.id == a0.id) return a;
      }
      return a0;
    }();
    std::vector<Waypoint> path;
    path.push_back({a0.x - kPathExtension * std::cos(a0.heading), a0.y - kPathExtension * std::sin(a0.heading)});
    path.insert(path.end(), pts.begin(), pts.end());
    path.push_back({last.x + kPathExtension * std::cos(last.heading),
                    last.y + kPathExtension * std::sin(last.heading)});
    r.path = Polyline(path);
    r.s = r.path.Project({a0.x, a0.y}).s;
    r.v_des = std::max(5.0, vmax + 1.0);
    out.push_back(std::move(r));
  }
  return out;
}

struct WorldPlan {
  double t0 = 0.0;
  Polyline line;
  std::vector<double> knot_s;  // arc length at knot k (time k * dt)
  std::vector<double> seg_v;   // mean speed over segment k, placed at (k + 0.5) * dt
  double dt = kStepSeconds;
  bool stationary = false;

  // Arc-length reference, its speed and the speed slope at time t.
  void Reference(double t, double* s_ref, double* v_ref, double* a_ref) const {
    const double u = std::clamp((t - t0) / dt, 0.0, static_cast<double>(knot_s.size() - 1));
    const auto k = std::min(static_cast<std::size_t>(u), knot_s.size() - 2);
    const double w = u - static_cast<double>(k);
    *s_ref = knot_s[k] + w * (knot_s[k + 1] - knot_s[k]);
    const double m = std::clamp(u - 0.5, 0.0, static_cast<double>(seg_v.size() - 1));
    const auto j = std::min(static_cast<std::size_t>(m), seg_v.size() - 1);
    if (j + 1 < seg_v.size()) {
      const double wm = m - static_cast<double>(j);
      *v_ref = seg_v[j] + wm * (seg_v[j + 1] - seg_v[j]);
      *a_ref = (u - 0.5 > 0.0 && u - 0.5 < static_cast<double>(seg_v.size() - 1))
                   ? (seg_v[j + 1] - seg_v[j]) / dt
                   : 0.0;
    } else {
      *v_ref = seg_v[j];
      *a_ref = 0.0;
    }
  }
};

WorldPlan MakeWorldPlan(const Trajectory& traj, const EgoState& ego, double t0) {
  WorldPlan plan;
  plan.t0 = t0;
  plan.dt = traj.dt;
  std::vector<Waypoint> pts;
  pts.push_back({ego.x, ego.y});
  for (const auto& p : traj.points) pts.push_back(FromEgoFrame(p, ego));
  plan.knot_s.push_back(0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double step = std::hypot(pts[k].x - pts[k - 1].x, pts[k].y - pts[k - 1].y);
    plan.knot_s.push_back(plan.knot_s.back() + step);
    plan.seg_v.push_back(step / traj.dt);
  }
  plan.stationary = plan.knot_s.back() < 0.1;
  plan.line = Polyline(std::move(pts));
  return plan;
}

double MinLaneDistance(const std::vector<Polyline>& lanes, const Waypoint& p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : lanes) best = std::min(best, l.Project(p).distance);
  return best;
}

}  // namespace

EgoState BicycleStep(const EgoState& s, double accel, double steer, double dt,
                     const BicycleParams& p) {
  const double a = std::clamp(accel, p.accel_min, p.accel_max);
  const double d = std::clamp(steer, -p.steer_max, p.steer_max);
  EgoState n = s;
  n.x += s.speed * std::cos(s.heading) * dt;
  n.y += s.speed * std::sin(s.heading) * dt;
  n.heading = WrapAngle(s.heading + s.speed / p.wheelbase * std::tan(d) * dt);
  n.speed = std::max(0.0, s.speed + a * dt);
  return n;
}

double IdmAccel(double v, double v_des, double gap, double leader_v, const IdmParams& p) {
  double a = p.max_accel * (1.0 - std::pow(v / std::max(v_des, 0.1), 4.0));
  if (gap >= 0.0) {
    const double bumper_gap = std::max(0.1, gap - p.vehicle_length);
    const double s_star = p.min_gap + std::max(0.0, v * p.time_headway +
                                                        v * (v - leader_v) /
                                                            (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    a -= p.max_accel * (s_star / bumper_gap) * (s_star / bumper_gap);
  }
  return std::max(a, -p.max_decel);
}

double ClosedLoopScore(bool collided, double progress_ratio, double comfort_ok_fraction,
                       bool drivable_violation) {
  if (collided) return 0.0;
  const double p = std::clamp(progress_ratio, 0.0, 1.0);
  const double c = std::clamp(comfort_ok_fraction, 0.0, 1.0);
  return 100.0 * (0.5 + 0.3 * p + 0.2 * c) * (drivable_violation ? 0.5 : 1.0);
}

ClosedLoopReport RolloutClosedLoop(Planner& planner, const DriveLog& log, const SimConfig& cfg) {
  if (log.frames.size() < 2) Fail(ErrorCode::kInvalidArgument, "log needs >= 2 frames");
  if (!(cfg.sim_dt > 0.0) || !(cfg.replan_hz > 0.0)) {
    Fail(ErrorCode::kConfig, "sim_dt and replan_hz must be > 0");
  }
  ClosedLoopReport report;
  report.scenario = fmt::format("{}-{}", log.kind, log.seed);
  report.reactive = cfg.reactive;

  const double t_end = cfg.horizon_s > 0.0 ? std::min(cfg.horizon_s, log.duration()) : log.duration();
  const auto steps = static_cast<std::size_t>(std::lround(t_end / cfg.sim_dt));
  const auto replan_every =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(1.0 / (cfg.replan_hz * cfg.sim_dt))));
  const BicycleParams bike;
  const IdmParams idm;

  std::vector<Polyline> lane_lines;
  for (const auto& l : log.lanes) lane_lines.emplace_back(l.centerline);
  const Polyline route = RoutePolyline(log.lanes);

  EgoState ego = log.frames.front().ego;
  const EgoState ego_start = ego;
  std::vector<ReactiveAgent> reactive = cfg.reactive ? InitReactive(log) : std::vector<ReactiveAgent>{};
  auto agents_at = [&](double t) {
    if (!cfg.reactive) return ReplayAgents(log, t);
    std::vector<AgentState> out;
    const auto replayed = ReplayAgents(log, t);
    for (const auto& r : reactive) {
      if (r.replay) {
        auto it = std::find_if(replayed.begin(), replayed.end(),
                               [&](const AgentState& a) { return a.id == r.state.id; });
        out.push_back(it != replayed.end() ? *it : r.state);
      } else {
        out.push_back(r.state);
      }
    }
    return out;
  };

  WorldPlan plan;
  // The recorded vehicle may already be accelerating at the first frame.
  double a_prev = std::clamp((log.frames[1].ego.speed - log.frames[0].ego.speed) / log.dt,
                             bike.accel_min, bike.accel_max);
  double a_eff_prev = a_prev;
  std::map<int, bool> in_contact;
  bool off_road = false;
  std::size_t comfort_bad = 0;
  std::vector<AgentState> agents = agents_at(0.0);

  for (std::size_t i = 0; i < steps; ++i) {
    const double t = cfg.sim_dt * static_cast<double>(i);
    if (i % replan_every == 0) {
      const auto frame = std::min(static_cast<std::size_t>(t / log.dt + 1e-9), log.frames.size() - 1);
      const Observation obs = MakeObservation(t, ego, agents, log.lanes, log.frames[frame].signals);
      try {
        PlanRequest req{&obs, &log, t, MixKey(log.seed, i)};
        const PlanOutput out = planner.Plan(req);
        if (out.traj.size() != kHorizon || !out.traj.IsFinite() || !(out.traj.dt > 0.0)) {
          Fail(ErrorCode::kNumeric, "planner returned an invalid trajectory");
        }
        plan = MakeWorldPlan(out.traj, ego, t);
      } catch (const std::exception& e) {
        report.planner_failed = true;
        report.diagnostic = fmt::format("planner '{}' failed at t={:.1f}s: {}", planner.name(), t, e.what());
        report.score = 0.0;
        return report;
      }
    }

    // Tracking controller.
    double s_ref = 0.0;
    double v_ref = 0.0;
    double a_ref = 0.0;
    plan.Reference(t, &s_ref, &v_ref, &a_ref);
    double steer = 0.0;
    double s_act = 0.0;
    bool overshoot = false;
    if (!plan.stationary) {
      s_act = plan.line.Project({ego.x, ego.y}).s;
      const double ld = std::clamp(cfg.lookahead_gain * ego.speed, kMinLookahead, kMaxLookahead);
      const Waypoint target = ToEgoFrame(plan.line.PointAt(s_act + ld), ego);
      const double dist = std::hypot(target.x, target.y);
      // A target behind the vehicle cannot be reached without reversing.
      overshoot = target.x <= 0.0 && dist > 0.5;
      if (dist > 1e-3 && !overshoot) {
        const double alpha = std::atan2(target.y, target.x);
        steer = std::atan(2.0 * bike.wheelbase * std::sin(alpha) / dist);
      }
    } else {
      s_ref = 0.0;
      v_ref = 0.0;
      a_ref = 0.0;
    }
    const double v_cmd =
        overshoot ? 0.0 : std::max(0.0, v_ref + cfg.along_track_gain * (s_ref - s_act));
    double accel = std::clamp(a_ref + cfg.speed_gain * (v_cmd - ego.speed), bike.accel_min,
                              bike.accel_max);
    accel = std::clamp(accel, a_prev - cfg.jerk_limit * cfg.sim_dt, a_prev + cfg.jerk_limit * cfg.sim_dt);
    a_prev = accel;
    const EgoState next = BicycleStep(ego, accel, steer, cfg.sim_dt, bike);
    const double a_eff = (next.speed - ego.speed) / cfg.sim_dt;
    const double jerk = i == 0 ? 0.0 : (a_eff - a_eff_prev) / cfg.sim_dt;
    if (std::abs(a_eff) > cfg.comfort_accel || std::abs(jerk) > cfg.comfort_jerk) ++comfort_bad;
    a_eff_prev = a_eff;

    // Agents.
    const double t_next = t + cfg.sim_dt;
    if (cfg.reactive) {
      std::vector<ReactiveAgent> updated = reactive;
      for (std::size_t j = 0; j < reactive.size(); ++j) {
        ReactiveAgent& r = updated[j];
        if (r.replay) continue;
        double gap = -1.0;
        double leader_v = 0.0;
        auto consider = [&](double x, double y, double heading, double speed) {
          const auto proj = r.path.Project({x, y});
          const double ds = proj.s - reactive[j].s;
          if (ds <= 0.0 || std::abs(proj.lateral) > kLeaderCorridor) return;
          if (gap < 0.0 || ds < gap) {
            gap = ds;
            leader_v = std::max(0.0, speed * std::cos(WrapAngle(heading - r.path.HeadingAt(proj.s))));
          }
        };
        consider(ego.x, ego.y, ego.heading, ego.speed);
        for (std::size_t o = 0; o < reactive.size(); ++o) {
          if (o == j || reactive[o].state.kind != AgentKind::kVehicle) continue;
          const auto& st = reactive[o].state;
          consider(st.x, st.y, st.heading, st.speed);
        }
        const double a = IdmAccel(r.state.speed, r.v_des, gap, leader_v, idm);
        const double v_new = std::max(0.0, r.state.speed + a * cfg.sim_dt);
        r.s += 0.5 * (r.state.speed + v_new) * cfg.sim_dt;
        const Waypoint p = r.path.PointAt(r.s);
        r.state.x = p.x;
        r.state.y = p.y;
        r.state.heading = r.path.HeadingAt(r.s);
        r.state.speed = v_new;
      }
      reactive = std::move(updated);
    }
    ego = next;
    agents = agents_at(t_next);

    // Metrics at t_next.
    for (const auto& a : agents) {
      const bool touch = std::hypot(a.x - ego.x, a.y - ego.y) < 2.0 * kCollisionRadius;
      bool& was = in_contact[a.id];
      if (touch && !was) ++report.collisions;
      was = touch;
    }
    const bool off = MinLaneDistance(lane_lines, {ego.x, ego.y}) > cfg.drivable_half_width;
    if (off && !off_road) ++report.drivable_violations;
    off_road = off;
    if (cfg.record_trace) report.trace.push_back({t_next, ego, accel, steer, agents});
  }

  report.comfort_violations = comfort_bad;
  report.comfort_ok_fraction =
      steps == 0 ? 1.0 : 1.0 - static_cast<double>(comfort_bad) / static_cast<double>(steps);
  if (!route.empty()) {
    const double s0 = route.Project({ego_start.x, ego_start.y}).s;
    const double covered = route.Project({ego.x, ego.y}).s - s0;
    const EgoState expert_end = LogEgoAt(log, t_end);
    const double expert = route.Project({expert_end.x, expert_end.y}).s - s0;
    report.progress_ratio = expert < 1.0 ? 1.0 : std::clamp(covered / expert, 0.0, 1.0);
  } else {
    report.progress_ratio = 1.0;
  }
  report.score = ClosedLoopScore(report.collisions > 0, report.progress_ratio,
                                 report.comfort_ok_fraction, report.drivable_violations > 0);
  return report;
}

void WriteTraceCsv(const ClosedLoopReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot write trace " + path);
  out << "t,entity,id,kind,x,y,heading,speed,accel,steer\n";
  for (const auto& row : report.trace) {
    out << fmt::format("{:.2f},ego,0,vehicle,{:.4f},{:.4f},{:.5f},{:.4f},{:.4f},{:.5f}\n", row.t,
                       row.ego.x, row.ego.y, row.ego.heading, row.ego.speed, row.accel, row.steer);
    for (const auto& a : row.agents) {
      out << fmt::format("{:.2f},agent,{},{},{:.4f},{:.4f},{:.5f},{:.4f},,\n", row.t, a.id,
                         AgentKindName(a.kind), a.x, a.y, a.heading, a.speed);
    }
  }
  if (!out) Fail(ErrorCode::kIo, "failed writing trace " + path);
}

}  // namespace knowdiff
