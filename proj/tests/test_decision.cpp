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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "knowdiff/decision.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

Observation StraightObs(double speed) {
  const DriveLog log = kdtest::StraightLog(speed);
  return ObserveLogFrame(log, 0);
}

// Route that turns 90 degrees left 20 m ahead of an ego at the origin.
Observation LeftTurnObs(double speed) {
  Observation obs;
  obs.ego = {0.0, 0.0, 0.0, speed};
  std::vector<Waypoint> arc;
  const double r = 12.0;
  for (int i = 0; i <= 12; ++i) {
    const double a = (std::numbers::pi / 2.0) * i / 12.0;
    arc.push_back({20.0 + r * std::sin(a), r - r * std::cos(a)});
  }
  obs.lanes = {{0, {{-50.0, 0.0}, {20.0, 0.0}}, {1}, true},
               {1, arc, {2}, true},
               {2, {{32.0, 12.0}, {32.0, 100.0}}, {}, true}};
  return obs;
}

std::size_t Count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("prompt carries every section in order and is deterministic") {
  Observation obs = StraightObs(6.0);
  const Prompt p = EncodePrompt(obs);
  const auto ego = p.text.find("[EGO STATE]");
  const auto agents = p.text.find("[SURROUNDING AGENTS]");
  const auto route = p.text.find("[ROUTE AND LANES]");
  const auto controls = p.text.find("[TRAFFIC CONTROLS]");
  const auto allowed = p.text.find("[ALLOWED META-ACTIONS]");
  REQUIRE(ego != std::string::npos);
  CHECK(ego < agents);
  CHECK(agents < route);
  CHECK(route < controls);
  CHECK(controls < allowed);
  CHECK(p.schema_tag == kActionSchemaTag);
  // Empty agent and signal sections say so explicitly.
  CHECK(Count(p.text, "none\n") == 2);
  CHECK(p.text.find("<action>DIRECTION|SPEED</action>") != std::string::npos);
  for (const auto& a : AllMetaActions()) CHECK(p.text.find(a.Label()) != std::string::npos);
  CHECK(EncodePrompt(obs).text == p.text);
}

TEST_CASE("prompt lists the nearest agents up to the budget and the red light") {
  Observation obs = StraightObs(6.0);
  for (int i = 0; i < 12; ++i) {
    obs.agents.push_back({100 + i, AgentKind::kVehicle, 5.0 + 3.0 * i, 3.5, 0.0, 4.0, 1});
  }
  obs.signals.push_back({0, SignalState::kRed, 20.0});
  const Prompt p = EncodePrompt(obs);
  CHECK(Count(p.text, "- vehicle #") == kPromptAgentBudget);
  CHECK(p.text.find("#107") != std::string::npos);
  CHECK(p.text.find("#108") == std::string::npos);
  CHECK(p.text.find("red light on lane 0 at 20.0 m") != std::string::npos);
}

TEST_CASE("heuristic decisions on reference scenes") {
  CHECK(HeuristicDecide(StraightObs(2.0)).Label() == "GoStraight|Accelerate");
  CHECK(HeuristicDecide(StraightObs(10.0)).Label() == "GoStraight|Cruise");

  Observation red = StraightObs(8.0);
  red.signals.push_back({0, SignalState::kRed, 10.0});
  CHECK(HeuristicDecide(red).Label() == "GoStraight|Brake");
  red.signals[0].state = SignalState::kGreen;
  CHECK(HeuristicDecide(red).Label() != "GoStraight|Brake");

  CHECK(HeuristicDecide(LeftTurnObs(8.0)).Label() == "LeftTurn|Decelerate");

  Observation lead = StraightObs(10.0);
  lead.agents.push_back({3, AgentKind::kVehicle, 10.0, 0.2, 0.0, 2.0, 0});
  CHECK(HeuristicDecide(lead).Label() == "GoStraight|Decelerate");

  // Ego sitting one lane right of the route.
  Observation offset = StraightObs(10.0);
  offset.ego.y = -3.0;
  CHECK(HeuristicDecide(offset).Label() == "LaneChangeLeft|Cruise");
}

TEST_CASE("route summary reports the upcoming turn") {
  const RouteSummary s = SummarizeRoute(LeftTurnObs(8.0));
  CHECK(s.has_route);
  CHECK(s.turn_ahead);
  // Twelve chords: first and last chord headings sit half a chord inside the arc.
  CHECK(s.upcoming_turn_deg == doctest::Approx(90.0 - 7.5));
  CHECK(s.upcoming_turn_distance_m == doctest::Approx(20.0));
  Observation bare;
  CHECK_FALSE(SummarizeRoute(bare).has_route);
}

TEST_CASE("action tags parse strictly") {
  CHECK(ParseActionTag("ok <action>LeftTurn|Decelerate</action>")->Label() == "LeftTurn|Decelerate");
  CHECK(ParseActionTag("<action> UTurn|Brake \n</action> <action>GoStraight|Cruise</action>")
            ->Label() == "UTurn|Brake");
  CHECK_FALSE(ParseActionTag("LeftTurn|Decelerate"));
  CHECK_FALSE(ParseActionTag("<action>LeftTurn|Decelerate"));
  CHECK_FALSE(ParseActionTag("<action>Left|Slow</action>"));
  CHECK_FALSE(ParseActionTag("<action>leftturn|decelerate</action>"));
  CHECK_FALSE(ParseActionTag(""));
}

TEST_CASE("collapse needs a shared label across a speed spread") {
  auto rec = [](const char* label, double v) {
    DecisionRecord r;
    r.action = *MetaAction::ParseLabel(label);
    r.ego_speed = v;
    return r;
  };
  std::vector<DecisionRecord> h = {rec("GoStraight|Cruise", 2.0), rec("GoStraight|Cruise", 3.0),
                                   rec("GoStraight|Cruise", 4.5)};
  CHECK(DetectCollapse(h, 3));
  CHECK_FALSE(DetectCollapse(h, 2));  // spread 1.5 over the last two
  CHECK_FALSE(DetectCollapse(h, 4));
  h[1] = rec("GoStraight|Brake", 3.0);
  CHECK_FALSE(DetectCollapse(h, 3));
  h = {rec("GoStraight|Cruise", 2.0), rec("GoStraight|Cruise", 4.0)};
  CHECK_FALSE(DetectCollapse(h, 2));  // exactly 2 m/s is not a collapse
  kdtest::ExpectCode([&] { DetectCollapse(h, 1); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("heuristic provider records the ego speed") {
  HeuristicProvider p;
  const DecisionRecord r = p.Decide(StraightObs(7.5));
  CHECK(r.provider == ProviderKind::kHeuristic);
  CHECK(r.ego_speed == 7.5);
  CHECK(r.raw_response.empty());
}
