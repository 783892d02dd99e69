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

#include "knowdiff/decision.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr double kComfortDecel = 3.0;       // m/s^2, stopping-distance model
constexpr double kStopMargin = 5.0;         // m
constexpr double kLeadGap = 15.0;           // m
constexpr double kTurnThresholdDeg = 15.0;
constexpr double kUTurnThresholdDeg = 150.0;
constexpr double kReferenceSpeed = 10.0;    // m/s
constexpr double kAccelerateBelow = 0.7;    // fraction of reference speed

double Deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double LaneNetHeadingChange(const Lane& lane) {
  const auto& c = lane.centerline;
  // Sum of wrapped per-segment changes so that U-turns keep their magnitude.
  double total = 0.0;
  double prev = std::atan2(c[1].y - c[0].y, c[1].x - c[0].x);
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    const double h = std::atan2(c[i + 1].y - c[i].y, c[i + 1].x - c[i].x);
    total += WrapAngle(h - prev);
    prev = h;
  }
  return total;
}

struct AgentView {
  const AgentState* agent;
  double distance;
  Waypoint rel;
};

std::vector<AgentView> NearestAgents(const Observation& obs, std::size_t budget) {
  std::vector<AgentView> views;
  views.reserve(obs.agents.size());
  for (const auto& a : obs.agents) {
    const Waypoint rel = ToEgoFrame(Waypoint{a.x, a.y}, obs.ego);
    views.push_back({&a, std::hypot(rel.x, rel.y), rel});
  }
  std::sort(views.begin(), views.end(), [](const AgentView& a, const AgentView& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.agent->id < b.agent->id;
  });
  if (views.size() > budget) views.resize(budget);
  return views;
}

}  // namespace

std::string_view ProviderKindName(ProviderKind kind) {
  return kind == ProviderKind::kRemote ? "remote" : "heuristic";
}

RouteSummary SummarizeRoute(const Observation& obs, double lookahead_m) {
  RouteSummary out;
  const auto order = RouteLaneOrder(obs.lanes);
  const Polyline route = RoutePolyline(obs.lanes);
  if (order.empty() || route.empty()) return out;
  out.has_route = true;
  const auto proj = route.Project({obs.ego.x, obs.ego.y});
  out.lateral_offset = proj.lateral;
  out.remaining_m = std::max(0.0, route.length() - proj.s);

  double lane_start = 0.0;
  for (std::size_t idx : order) {
    const Lane& lane = obs.lanes[idx];
    const double lane_len = Polyline(lane.centerline).length();
    const double lane_end = lane_start + lane_len;
    const bool relevant = lane_end > proj.s && lane_start <= proj.s + lookahead_m;
    if (relevant) {
      const double change = Deg(LaneNetHeadingChange(lane));
      if (std::abs(change) > kTurnThresholdDeg) {
        out.turn_ahead = true;
        out.upcoming_turn_deg = change;
        out.upcoming_turn_distance_m = std::max(0.0, lane_start - proj.s);
        break;
      }
    }
    lane_start = lane_end;
  }
  return out;
}

Prompt EncodePrompt(const Observation& obs) {
  std::string text;
  text += "You are the high-level decision module of an automated vehicle. "
          "Choose the driving meta-action for the next 8 seconds.\n\n";

  text += "[EGO STATE]\n";
  text += fmt::format("position: ({:.1f}, {:.1f}) m\nheading: {:.1f} deg\nspeed: {:.1f} m/s\n\n",
                      obs.ego.x, obs.ego.y, Deg(obs.ego.heading), obs.ego.speed);

  text += "[SURROUNDING AGENTS]\n";
  const auto agents = NearestAgents(obs, kPromptAgentBudget);
  if (agents.empty()) {
    text += "none\n";
  } else {
    for (const auto& v : agents) {
      const AgentState& a = *v.agent;
      text += fmt::format(
          "- {} #{}: {:.1f} m away, {:.1f} m ahead, {:.1f} m left, speed {:.1f} m/s, "
          "relative heading {:.1f} deg\n",
          AgentKindName(a.kind), a.id, v.distance, v.rel.x, v.rel.y, a.speed,
          Deg(WrapAngle(a.heading - obs.ego.heading)));
    }
  }
  text += "\n";

  text += "[ROUTE AND LANES]\n";
  const RouteSummary route = SummarizeRoute(obs);
  if (!route.has_route) {
    text += "no route\n";
  } else {
    std::string route_ids;
    for (const auto& lane : obs.lanes) {
      if (!lane.on_route) continue;
      if (!route_ids.empty()) route_ids += ", ";
      route_ids += std::to_string(lane.id);
    }
    text += fmt::format("lanes in map: {}; route lanes: {}\n", obs.lanes.size(), route_ids);
    text += fmt::format("lateral offset from route: {:.1f} m ({})\n", route.lateral_offset,
                        route.lateral_offset >= 0.0 ? "left of route" : "right of route");
    text += fmt::format("route remaining: {:.1f} m\n", route.remaining_m);
    if (route.turn_ahead) {
      text += fmt::format("upcoming turn: {:.1f} deg {} in {:.1f} m\n",
                          std::abs(route.upcoming_turn_deg),
                          route.upcoming_turn_deg > 0.0 ? "left" : "right",
                          route.upcoming_turn_distance_m);
    } else {
      text += "upcoming turn: none within 30 m\n";
    }
  }
  text += "\n";

  text += "[TRAFFIC CONTROLS]\n";
  if (obs.signals.empty()) {
    text += "none\n";
  } else {
    auto signals = obs.signals;
    std::sort(signals.begin(), signals.end(),
              [](const SignalObservation& a, const SignalObservation& b) {
                if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
                return a.lane_id < b.lane_id;
              });
    for (const auto& s : signals) {
      text += fmt::format("- {} light on lane {} at {:.1f} m\n", SignalStateName(s.state),
                          s.lane_id, s.distance_m);
    }
  }
  text += "\n";

  text += "[ALLOWED META-ACTIONS]\n";
  for (const auto& a : AllMetaActions()) {
    text += a.Label();
    text += '\n';
  }
  text += "\nReply with exactly one label from the list above in the form "
          "<action>DIRECTION|SPEED</action>.\n";
  return Prompt{std::move(text), std::string(kActionSchemaTag)};
}

std::optional<MetaAction> ParseActionTag(std::string_view response) {
  constexpr std::string_view kOpen = "<action>";
  constexpr std::string_view kClose = "</action>";
  const auto open = response.find(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto start = open + kOpen.size();
  const auto close = response.find(kClose, start);
  if (close == std::string_view::npos) return std::nullopt;
  std::string_view body = response.substr(start, close - start);
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) body.remove_prefix(1);
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
  return MetaAction::ParseLabel(body);
}

MetaAction HeuristicDecide(const Observation& obs) {
  const double v = std::max(0.0, obs.ego.speed);
  const double stopping = v * v / (2.0 * kComfortDecel) + kStopMargin;
  for (const auto& s : obs.signals) {
    if (s.state == SignalState::kRed && s.distance_m <= stopping) {
      return {Direction::kGoStraight, SpeedProfile::kBrake};
    }
  }

  const Polyline route = RoutePolyline(obs.lanes);
  if (!route.empty()) {
    const auto ego_proj = route.Project({obs.ego.x, obs.ego.y});
    for (const auto& a : obs.agents) {
      if (a.kind != AgentKind::kVehicle) continue;
      const auto p = route.Project({a.x, a.y});
      const double gap = p.s - ego_proj.s;
      if (std::abs(p.lateral) < 0.5 * kLaneWidth && gap > 0.0 && gap <= kLeadGap &&
          a.speed < v) {
        return {Direction::kGoStraight, SpeedProfile::kDecelerate};
      }
    }
  }

  const RouteSummary summary = SummarizeRoute(obs);
  if (summary.turn_ahead) {
    Direction d = summary.upcoming_turn_deg > 0.0 ? Direction::kLeftTurn : Direction::kRightTurn;
    if (std::abs(summary.upcoming_turn_deg) > kUTurnThresholdDeg) d = Direction::kUTurn;
    return {d, SpeedProfile::kDecelerate};
  }
  const double offset = std::abs(summary.lateral_offset);
  if (summary.has_route && offset > 2.0 && offset < 4.0) {
    // Ego right of the route means the route lies to the left.
    return {summary.lateral_offset < 0.0 ? Direction::kLaneChangeLeft : Direction::kLaneChangeRight,
            SpeedProfile::kCruise};
  }
  if (v < kAccelerateBelow * kReferenceSpeed) {
    return {Direction::kGoStraight, SpeedProfile::kAccelerate};
  }
  return {Direction::kGoStraight, SpeedProfile::kCruise};
}

bool DetectCollapse(const std::vector<DecisionRecord>& history, std::size_t window) {
  if (window < 2) Fail(ErrorCode::kInvalidArgument, "collapse window must be >= 2");
  if (history.size() < window) return false;
  const auto first = history.end() - static_cast<std::ptrdiff_t>(window);
  double lo = first->ego_speed;
  double hi = first->ego_speed;
  for (auto it = first; it != history.end(); ++it) {
    if (!(it->action == first->action)) return false;
    lo = std::min(lo, it->ego_speed);
    hi = std::max(hi, it->ego_speed);
  }
  return hi - lo > 2.0;
}

DecisionRecord HeuristicProvider::Decide(const Observation& obs) {
  const auto start = std::chrono::steady_clock::now();
  DecisionRecord rec;
  rec.action = HeuristicDecide(obs);
  rec.provider = ProviderKind::kHeuristic;
  rec.ego_speed = obs.ego.speed;
  rec.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace knowdiff
