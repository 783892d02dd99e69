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
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "knowdiff/generator.hpp"
#include "knowdiff/planner.hpp"
#include "knowdiff/sim.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

class ThrowingPlanner final : public Planner {
 public:
  std::string name() const override { return "boom"; }
  PlanOutput Plan(const PlanRequest& req) override {
    if (req.time > 1.0) throw std::runtime_error("bad input");
    return ExpertPlanner().Plan(req);
  }
};

std::vector<DriveLog> Corpus(std::uint64_t seed, std::size_t count) {
  GeneratorConfig c;
  c.count = count;
  c.seed = seed;
  return GenerateScenarios(c);
}

}  // namespace

TEST_CASE("bicycle model sanity") {
  const EgoState s{0.0, 0.0, 0.0, 10.0};
  const EgoState straight = BicycleStep(s, 1.0, 0.0, 0.1);
  CHECK(straight.x == doctest::Approx(1.0));
  CHECK(straight.y == 0.0);
  CHECK(straight.speed == doctest::Approx(10.1));
  // Inputs clamp to the limits and speed never goes negative.
  CHECK(BicycleStep(s, 50.0, 0.0, 0.1).speed == doctest::Approx(10.3));
  CHECK(BicycleStep({0.0, 0.0, 0.0, 0.1}, -4.0, 0.0, 0.1).speed == 0.0);
  // Steady turning radius L / tan(delta).
  EgoState c = s;
  const double delta = 0.1;
  for (int i = 0; i < 2000; ++i) c = BicycleStep(c, 0.0, delta, 0.001);
  const double radius = 2.7 / std::tan(delta);
  CHECK(c.heading == doctest::Approx(20.0 / radius).epsilon(1e-3));
  const double left = BicycleStep(s, 0.0, 5.0, 0.1).heading;
  CHECK(left == doctest::Approx(10.0 * std::tan(0.6) / 2.7 * 0.1));
}

TEST_CASE("coasting straight keeps speed and heading") {
  EgoState s{1.0, -2.0, 0.7, 9.0};
  for (int i = 0; i < 100; ++i) {
    const EgoState n = BicycleStep(s, 0.0, 0.0, 0.1);
    CHECK(n.speed == s.speed);
    CHECK(n.heading == s.heading);
    CHECK(n.x == doctest::Approx(s.x + 0.9 * std::cos(0.7)).epsilon(1e-12));
    CHECK(std::abs(n.y - (s.y + 0.9 * std::sin(0.7))) < 1e-9);
    s = n;
  }
}

TEST_CASE("IDM limits") {
  // Free road at the desired speed: no acceleration.
  CHECK(IdmAccel(10.0, 10.0, -1.0, 0.0) == doctest::Approx(0.0));
  CHECK(IdmAccel(0.0, 10.0, -1.0, 0.0) == doctest::Approx(1.5));
  // Closing on a stopped leader brakes, capped at max_decel.
  CHECK(IdmAccel(10.0, 10.0, 20.0, 0.0) < -2.0);
  CHECK(IdmAccel(15.0, 15.0, 4.5, 0.0) == doctest::Approx(-9.0));
  CHECK(IdmAccel(10.0, 10.0, 200.0, 10.0) > -0.1);
}

TEST_CASE("closed-loop score formula") {
  CHECK(ClosedLoopScore(true, 1.0, 1.0, false) == 0.0);
  CHECK(ClosedLoopScore(false, 1.0, 1.0, false) == doctest::Approx(100.0));
  CHECK(ClosedLoopScore(false, 0.0, 0.0, false) == doctest::Approx(50.0));
  CHECK(ClosedLoopScore(false, 1.0, 1.0, true) == doctest::Approx(50.0));
  CHECK(ClosedLoopScore(false, 2.0, 0.5, false) == doctest::Approx(90.0));
}

TEST_CASE("expert replay scores high and never collides") {
  ExpertPlanner expert;
  for (bool reactive : {false, true}) {
    SimConfig cfg;
    cfg.reactive = reactive;
    for (const auto& log : Corpus(21, 24)) {
      CAPTURE(log.kind);
      CAPTURE(reactive);
      const ClosedLoopReport r = RolloutClosedLoop(expert, log, cfg);
      CHECK(r.collisions == 0);
      CHECK(r.score >= 95.0);
    }
  }
}

TEST_CASE("driving into a stopped vehicle collides and scores zero") {
  StraightPlanner straight;
  const ClosedLoopReport r = RolloutClosedLoop(straight, kdtest::StoppedLeadLog(), SimConfig{});
  CHECK(r.collisions == 1);
  CHECK(r.score == 0.0);
  ExpertPlanner expert;
  const ClosedLoopReport e = RolloutClosedLoop(expert, kdtest::StoppedLeadLog(), SimConfig{});
  CHECK(e.collisions == 0);
}

TEST_CASE("collision counts agree with a brute-force trace scan") {
  StraightPlanner straight;
  SimConfig cfg;
  cfg.record_trace = true;
  for (const auto& log : Corpus(4, 18)) {
    const ClosedLoopReport r = RolloutClosedLoop(straight, log, cfg);
    REQUIRE_FALSE(r.trace.empty());
    std::set<int> hit;
    for (const auto& row : r.trace) {
      for (const auto& a : row.agents) {
        if (std::hypot(a.x - row.ego.x, a.y - row.ego.y) < 2.0 * kCollisionRadius) hit.insert(a.id);
      }
    }
    CHECK(r.collisions == hit.size());
  }
}

TEST_CASE("rollouts are deterministic") {
  ExpertPlanner expert;
  SimConfig cfg;
  cfg.reactive = true;
  cfg.record_trace = true;
  const DriveLog log = Corpus(3, 6)[2];
  const ClosedLoopReport a = RolloutClosedLoop(expert, log, cfg);
  const ClosedLoopReport b = RolloutClosedLoop(expert, log, cfg);
  CHECK(a.score == b.score);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].ego.x == b.trace[i].ego.x);
    CHECK(a.trace[i].ego.y == b.trace[i].ego.y);
  }
}

TEST_CASE("reactive agents respond to a slow ego and never rear-end it") {
  // The ego crawls while a vehicle approaches from behind in its lane.
  DriveLog log = kdtest::StraightLog(2.0);
  for (std::size_t k = 0; k < log.frames.size(); ++k) {
    log.frames[k].agents.push_back(
        {11, AgentKind::kVehicle, -30.0 + 12.0 * log.dt * static_cast<double>(k), 0.0, 0.0, 12.0, 0});
  }
  ExpertPlanner expert;
  SimConfig cfg;
  cfg.record_trace = true;
  const ClosedLoopReport nr = RolloutClosedLoop(expert, log, cfg);
  cfg.reactive = true;
  const ClosedLoopReport r = RolloutClosedLoop(expert, log, cfg);
  CHECK(nr.collisions == 1);  // the replayed agent drives through
  CHECK(r.collisions == 0);
  CHECK(r.trace.back().agents[0].x < r.trace.back().ego.x);
}

TEST_CASE("reactive followers never rear-end a braking ego") {
  // A follower trails the ego in its lane. Lane-change kinds are left out:
  // there the ego cuts in ahead of the follower, which is not a rear-end.
  ExpertPlanner expert;
  SimConfig cfg;
  cfg.reactive = true;
  for (auto log : Corpus(7, 24)) {
    if (log.kind.starts_with("lane_change")) continue;
    const Polyline route = RoutePolyline(log.lanes);
    int lane_id = 0;
    for (const auto i : RouteLaneOrder(log.lanes)) {
      lane_id = log.lanes[i].id;
      break;
    }
    for (auto& f : log.frames) {
      const double s = route.Project({f.ego.x, f.ego.y}).s - 12.0;
      const Waypoint p = route.PointAt(s);
      f.agents.push_back({900, AgentKind::kVehicle, p.x, p.y, route.HeadingAt(s), f.ego.speed, lane_id});
    }
    CAPTURE(log.kind);
    const ClosedLoopReport r = RolloutClosedLoop(expert, log, cfg);
    CHECK(r.collisions == 0);
  }
}

TEST_CASE("a throwing planner scores zero with a diagnostic") {
  ThrowingPlanner boom;
  const ClosedLoopReport r = RolloutClosedLoop(boom, kdtest::StraightLog(8.0), SimConfig{});
  CHECK(r.planner_failed);
  CHECK(r.score == 0.0);
  CHECK(r.diagnostic.find("planner 'boom' failed at t=") != std::string::npos);
}

TEST_CASE("trace CSV") {
  ExpertPlanner expert;
  SimConfig cfg;
  cfg.record_trace = true;
  const ClosedLoopReport r = RolloutClosedLoop(expert, kdtest::StoppedLeadLog(), cfg);
  kdtest::TempDir dir;
  WriteTraceCsv(r, (dir / "t.csv").string());
  std::ifstream in(dir / "t.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "t,entity,id,kind,x,y,heading,speed,accel,steer");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 2 * r.trace.size());
  kdtest::ExpectCode([&] { WriteTraceCsv(r, (dir / "no/such/t.csv").string()); }, ErrorCode::kIo);
}
