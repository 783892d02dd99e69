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

#include <numbers>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/scene.hpp"
#include "test_util.hpp"

using namespace knowdiff;

TEST_CASE("polyline projection and arc-length lookup") {
  const Polyline p({{0.0, 0.0}, {10.0, 0.0}, {10.0, 10.0}});
  CHECK(p.length() == doctest::Approx(20.0));
  const auto a = p.Project({4.0, 2.0});
  CHECK(a.s == doctest::Approx(4.0));
  CHECK(a.lateral == doctest::Approx(2.0));
  CHECK(a.distance == doctest::Approx(2.0));
  const auto b = p.Project({12.0, 5.0});
  CHECK(b.s == doctest::Approx(15.0));
  CHECK(b.lateral == doctest::Approx(-2.0));
  const Waypoint m = p.PointAt(15.0);
  CHECK(m.x == doctest::Approx(10.0));
  CHECK(m.y == doctest::Approx(5.0));
  // Linear extrapolation past both ends.
  CHECK(p.PointAt(-3.0).x == doctest::Approx(-3.0));
  CHECK(p.PointAt(25.0).y == doctest::Approx(15.0));
  CHECK(p.HeadingAt(15.0) == doctest::Approx(std::numbers::pi / 2.0));
}

TEST_CASE("route order follows successor links") {
  std::vector<Lane> lanes = {
      {5, {{20.0, 0.0}, {30.0, 0.0}}, {}, true},
      {3, {{0.0, 0.0}, {20.0, 0.0}}, {5, 9}, true},
      {9, {{20.0, 0.0}, {20.0, 10.0}}, {}, false},
  };
  ValidateLanes(lanes);
  const auto order = RouteLaneOrder(lanes);
  REQUIRE(order.size() == 2);
  CHECK(lanes[order[0]].id == 3);
  CHECK(lanes[order[1]].id == 5);
  CHECK(RoutePolyline(lanes).length() == doctest::Approx(30.0));
  lanes[1].successors.push_back(42);
  kdtest::ExpectCode([&] { ValidateLanes(lanes); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("signals are reported along the route ahead only") {
  DriveLog log = kdtest::StraightLog(5.0);
  log.frames[0].signals = {{0, SignalState::kRed, 20.0, 0.0}, {0, SignalState::kGreen, -5.0, 0.0},
                           {1, SignalState::kRed, 30.0, 3.5}};
  const Observation obs = ObserveLogFrame(log, 0);
  REQUIRE(obs.signals.size() == 1);
  CHECK(obs.signals[0].state == SignalState::kRed);
  CHECK(obs.signals[0].distance_m == doctest::Approx(20.0));
}

TEST_CASE("log windows in the anchor frame") {
  const DriveLog log = kdtest::StraightLog(4.0);
  const Trajectory t = LogEgoTrajectory(log, 5, 16, log.frames[4].ego);
  CHECK(t.points[0].x == doctest::Approx(2.0));
  CHECK(t.points[15].x == doctest::Approx(32.0));
  const PoseTrajectory p = LogEgoPoses(log, 5, 16, log.frames[4].ego);
  CHECK(p.frames[3].hx == doctest::Approx(1.0));
  kdtest::ExpectCode([&] { LogEgoTrajectory(log, 10, 16, log.frames[0].ego); },
                     ErrorCode::kInvalidArgument);
}

TEST_CASE("drive log file round trip") {
  DriveLog log = kdtest::StoppedLeadLog();
  log.frames[3].signals.push_back({0, SignalState::kYellow, 50.0, 0.0});
  kdtest::TempDir dir;
  SaveDriveLog(log, dir / "a.kdlog");
  SaveDriveLog(kdtest::StraightLog(3.0), dir / "b.kdlog");
  WriteTextFile(dir / "notes.txt", "ignored");
  const DriveLog back = LoadDriveLog(dir / "a.kdlog");
  CHECK(SerializeDriveLog(back) == SerializeDriveLog(log));
  CHECK(back.frames[3].signals[0].state == SignalState::kYellow);
  const auto all = LoadDriveLogDir(dir.path());
  REQUIRE(all.size() == 2);
  CHECK(all[0].kind == "stopped_lead");
  kdtest::ExpectCode([&] { LoadDriveLogDir(dir / "nope"); }, ErrorCode::kIo);
  auto bytes = SerializeDriveLog(log);
  bytes[bytes.size() - 1] ^= 1;
  WriteFileBytes(dir / "bad.kdlog", bytes);
  kdtest::ExpectCode([&] { LoadDriveLog(dir / "bad.kdlog"); }, ErrorCode::kChecksum);
}
