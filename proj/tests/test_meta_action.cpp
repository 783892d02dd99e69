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
#include <random>
#include <set>

#include "knowdiff/meta_action.hpp"
#include "test_util.hpp"

using namespace knowdiff;

TEST_CASE("labels round-trip and indices are a bijection") {
  std::set<std::string> labels;
  for (int i = 0; i < kNumMetaActions; ++i) {
    const MetaAction a = MetaAction::FromIndex(i);
    CHECK(a.index() == i);
    CHECK(AllMetaActions()[static_cast<std::size_t>(i)] == a);
    const auto parsed = MetaAction::ParseLabel(a.Label());
    REQUIRE(parsed.has_value());
    CHECK(*parsed == a);
    labels.insert(a.Label());
  }
  CHECK(labels.size() == 24);
  CHECK(MetaAction{Direction::kLeftTurn, SpeedProfile::kDecelerate}.Label() == "LeftTurn|Decelerate");
  CHECK_FALSE(MetaAction::ParseLabel("LeftTurn|Fast").has_value());
  CHECK_FALSE(MetaAction::ParseLabel("LeftTurn Decelerate").has_value());
  CHECK_FALSE(MetaAction::ParseLabel("").has_value());
  kdtest::ExpectCode([] { MetaAction::FromIndex(24); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("classifier rule table") {
  auto f = [](double dy, double dpsi_deg, double a, double v_end = 10.0) {
    FeatureVector v;
    v.lateral_disp = dy;
    v.heading_change = dpsi_deg * std::numbers::pi / 180.0;
    v.mean_accel = a;
    v.final_speed = v_end;
    return v;
  };
  CHECK(Classify(f(0.1, 2, 0.0)) == MetaAction{Direction::kGoStraight, SpeedProfile::kCruise});
  CHECK(Classify(f(0.0, 40, -1.0)) == MetaAction{Direction::kLeftTurn, SpeedProfile::kDecelerate});
  CHECK(Classify(f(0.0, -40, 1.0)) == MetaAction{Direction::kRightTurn, SpeedProfile::kAccelerate});
  CHECK(Classify(f(0.0, 170, 0.0)).direction == Direction::kUTurn);
  CHECK(Classify(f(3.0, 1, 0.0)).direction == Direction::kLaneChangeLeft);
  CHECK(Classify(f(-3.0, 1, 0.0)).direction == Direction::kLaneChangeRight);
  CHECK(Classify(f(0.0, 0, -2.0, 0.1)).speed == SpeedProfile::kBrake);
  CHECK(Classify(f(0.0, 0, -2.0, 3.0)).speed == SpeedProfile::kDecelerate);
}

TEST_CASE("classifier is total over random features") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 5000; ++i) {
    FeatureVector v;
    v.lateral_disp = u(rng);
    v.heading_change = u(rng) / 3.0;
    v.mean_accel = u(rng) / 2.0;
    v.final_speed = std::abs(u(rng));
    const MetaAction a = Classify(v);
    CHECK(a.index() >= 0);
    CHECK(a.index() < kNumMetaActions);
    CHECK(Classify(v) == a);
  }
}
