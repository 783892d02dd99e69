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
#include <random>

#include "knowdiff/metrics.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

Trajectory Line(double speed, double y = 0.0) {
  Trajectory t;
  for (std::size_t k = 0; k < kHorizon; ++k) t.points.push_back({speed * 0.5 * (k + 1), y});
  return t;
}

Trajectory Shift(Trajectory t, double dx, double dy) {
  for (auto& p : t.points) {
    p.x += dx;
    p.y += dy;
  }
  return t;
}

}  // namespace

TEST_CASE("constant offset gives equal ADE and FDE") {
  const Trajectory gt = Line(10.0);
  const Trajectory pred = Shift(gt, 3.0, 4.0);
  CHECK(Ade(pred, gt) == doctest::Approx(5.0));
  for (double h : {0.5, 3.0, 5.0, 8.0}) CHECK(FdeAt(pred, gt, h) == doctest::Approx(5.0));
  CHECK(Ade(gt, gt) == 0.0);
}

TEST_CASE("FDE indexes point k at (k + 1) dt") {
  const Trajectory gt = Line(10.0);
  Trajectory pred = gt;
  pred.points[5].y = 2.0;   // 3 s
  pred.points[9].y = 7.0;   // 5 s
  pred.points[15].y = 1.0;  // 8 s
  CHECK(FdeAt(pred, gt, 3.0) == 2.0);
  CHECK(FdeAt(pred, gt, 5.0) == 7.0);
  CHECK(FdeAt(pred, gt, 8.0) == 1.0);
  CHECK(Ade(pred, gt) == doctest::Approx(10.0 / 16.0));
  kdtest::ExpectCode([&] { FdeAt(pred, gt, 8.5); }, ErrorCode::kInvalidArgument);
  kdtest::ExpectCode([&] { FdeAt(pred, gt, 1.2); }, ErrorCode::kInvalidArgument);
  kdtest::ExpectCode([&] { FdeAt(pred, gt, 0.0); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("miss rate uses strict thresholds") {
  const Trajectory gt = Line(8.0);
  std::vector<Trajectory> preds = {gt, Shift(gt, 0.0, 2.0), Shift(gt, 0.0, 2.0 + 1e-9),
                                   Shift(gt, 0.0, 1.0)};
  std::vector<Trajectory> gts(4, gt);
  CHECK(MissRate(preds, gts) == doctest::Approx(0.25));
  // Error only at 8 s, exactly on the bound.
  Trajectory late = gt;
  late.points[15].x += 8.0;
  CHECK(MissRate({late}, {gt}) == 0.0);
  late.points[15].x += 0.01;
  CHECK(MissRate({late}, {gt}) == 1.0);
  kdtest::ExpectCode([] { MissRate({}, {}); }, ErrorCode::kUndefinedMetric);
  kdtest::ExpectCode([&] { MissRate({gt}, {}); }, ErrorCode::kShape);
}

TEST_CASE("metrics are symmetric and translation invariant") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory a = Line(6.0), b = Line(9.0);
    for (auto& p : a.points) p = {p.x + n(rng), p.y + n(rng)};
    for (auto& p : b.points) p = {p.x + n(rng), p.y + n(rng)};
    const double dx = n(rng), dy = n(rng);
    CHECK(Ade(a, b) == doctest::Approx(Ade(b, a)));
    CHECK(Ade(Shift(a, dx, dy), Shift(b, dx, dy)) == doctest::Approx(Ade(a, b)));
    CHECK(FdeAt(a, b, 8.0) == doctest::Approx(FdeAt(b, a, 8.0)));
  }
}

TEST_CASE("shape errors") {
  Trajectory a = Line(5.0), b = Line(5.0);
  b.points.pop_back();
  kdtest::ExpectCode([&] { Ade(a, b); }, ErrorCode::kShape);
  kdtest::ExpectCode([&] { Ade(Trajectory{}, Trajectory{}); }, ErrorCode::kShape);
  b = a;
  b.dt = 0.1;
  kdtest::ExpectCode([&] { Ade(a, b); }, ErrorCode::kShape);
}
