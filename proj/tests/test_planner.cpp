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

#include <memory>

#include "knowdiff/generator.hpp"
#include "knowdiff/library.hpp"
#include "knowdiff/planner.hpp"
#include "knowdiff/remote.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

struct Fixture {
  std::vector<DriveLog> logs;
  std::shared_ptr<const PriorLibrary> lib;
  std::shared_ptr<const Checkpoint> ckpt;

  Fixture() {
    GeneratorConfig g;
    g.count = 48;
    g.seed = 2;
    logs = GenerateScenarios(g);
    std::vector<Trajectory> segs;
    for (const auto& log : logs) {
      const auto s = SegmentLog(log, 8.0);
      segs.insert(segs.end(), s.begin(), s.end());
    }
    lib = std::make_shared<const PriorLibrary>(BuildLibrary(segs));
    DenoiserArch a;
    a.width = 32;
    a.layers = 1;
    ckpt = std::make_shared<const Checkpoint>(Checkpoint{Denoiser::Create(a, 1), NoiseSchedule{}, {}});
  }

  PlanRequest Request(std::size_t i, const Observation& obs) const {
    return {&obs, &logs[i], 2.0, MixKey(logs[i].seed, 4)};
  }
};

}  // namespace

TEST_CASE("expert and straight baselines") {
  const Fixture f;
  const Observation obs = ObserveLogFrame(f.logs[0], 4);
  const PlanOutput e = ExpertPlanner().Plan(f.Request(0, obs));
  const Trajectory gt = LogEgoTrajectory(f.logs[0], 5, kHorizon, f.logs[0].frames[4].ego);
  REQUIRE(e.traj.size() == kHorizon);
  for (std::size_t k = 0; k < kHorizon; ++k) {
    CHECK(e.traj.points[k].x == doctest::Approx(gt.points[k].x));
    CHECK(e.traj.points[k].y == doctest::Approx(gt.points[k].y));
  }
  const PlanOutput s = StraightPlanner().Plan(f.Request(0, obs));
  CHECK(s.traj.points[15].y == 0.0);
  CHECK(s.traj.points[15].x == doctest::Approx(8.0 * obs.ego.speed));
}

TEST_CASE("knowdiffuser plans with one denoiser call and no network") {
  const Fixture f;
  const auto before = NetworkRequestCount();
  KnowDiffuserPlanner kd(f.lib, f.ckpt, std::make_shared<HeuristicProvider>(), {});
  PriorPlanner prior(f.lib, std::make_shared<HeuristicProvider>());
  for (std::size_t i = 0; i < f.logs.size(); ++i) {
    const Observation obs = ObserveLogFrame(f.logs[i], 4);
    const PlanOutput out = kd.Plan(f.Request(i, obs));
    CHECK(out.denoiser_calls == 1);
    CHECK(out.traj.size() == kHorizon);
    CHECK(out.traj.IsFinite());
    REQUIRE(out.decision.has_value());
    CHECK(out.decision->action == HeuristicDecide(obs));
    const PlanOutput p = prior.Plan(f.Request(i, obs));
    CHECK(p.denoiser_calls == 0);
    CHECK(p.substituted == out.substituted);
  }
  CHECK(NetworkRequestCount() == before);
}

TEST_CASE("planning is reproducible per request key") {
  const Fixture f;
  KnowDiffuserPlanner a(f.lib, f.ckpt, std::make_shared<HeuristicProvider>(), {});
  KnowDiffuserPlanner b(f.lib, f.ckpt, std::make_shared<HeuristicProvider>(), {});
  const Observation obs = ObserveLogFrame(f.logs[3], 4);
  PlanRequest req = f.Request(3, obs);
  const Trajectory ta = a.Plan(req).traj;
  CHECK(b.Plan(req).traj == ta);
  req.key += 1;
  CHECK_FALSE(a.Plan(req).traj == ta);
}

TEST_CASE("full sampler variant counts its calls") {
  const Fixture f;
  KnowDiffuserOptions o;
  o.full_steps = 20;
  KnowDiffuserPlanner full(f.lib, f.ckpt, std::make_shared<HeuristicProvider>(), o);
  const Observation obs = ObserveLogFrame(f.logs[1], 4);
  CHECK(full.Plan(f.Request(1, obs)).denoiser_calls == 20);
  CHECK(full.name() != KnowDiffuserPlanner(f.lib, f.ckpt, std::make_shared<HeuristicProvider>(), {}).name());
}

TEST_CASE("log ego interpolation") {
  const DriveLog log = kdtest::StraightLog(4.0);
  CHECK(LogEgoAt(log, 1.25).x == doctest::Approx(5.0));
  CHECK(LogEgoAt(log, 12.0).x == doctest::Approx(48.0));
  CHECK(MixKey(1, 2) != MixKey(2, 1));
}
