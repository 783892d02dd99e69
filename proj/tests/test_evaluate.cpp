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

#include <json.hpp>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/evaluate.hpp"
#include "knowdiff/generator.hpp"
#include "knowdiff/planner.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

// Expert future displaced by a fixed ego-frame offset.
class OffsetPlanner final : public Planner {
 public:
  OffsetPlanner(double dx, double dy) : dx_(dx), dy_(dy) {}
  std::string name() const override { return "offset"; }
  PlanOutput Plan(const PlanRequest& req) override {
    PlanOutput out = ExpertPlanner().Plan(req);
    for (auto& p : out.traj.points) {
      p.x += dx_;
      p.y += dy_;
    }
    return out;
  }

 private:
  double dx_, dy_;
};

std::vector<DriveLog> Logs(std::size_t n) {
  GeneratorConfig c;
  c.count = n;
  c.seed = 31;
  return GenerateScenarios(c);
}

}  // namespace

TEST_CASE("the expert reproduces ground truth exactly") {
  ExpertPlanner expert;
  const OpenLoopReport r = EvaluateOpenLoop(expert, Logs(12));
  CHECK(r.sample_count == 12);
  CHECK(r.ade_8s == doctest::Approx(0.0).scale(1e-9));
  CHECK(r.fde_8s == doctest::Approx(0.0).scale(1e-9));
  CHECK(r.miss_rate == 0.0);
  CHECK(r.planner == "expert");
}

TEST_CASE("aggregates are means over samples") {
  OffsetPlanner off(3.0, 4.0);
  const OpenLoopReport r = EvaluateOpenLoop(off, Logs(6));
  CHECK(r.ade_8s == doctest::Approx(5.0));
  CHECK(r.fde_3s == doctest::Approx(5.0));
  CHECK(r.miss_rate == 1.0);
  double sum = 0.0;
  for (const auto& s : r.samples) {
    CHECK(s.miss);
    sum += s.ade;
  }
  CHECK(sum / r.samples.size() == doctest::Approx(r.ade_8s));

  OffsetPlanner small(1.0, 0.0);
  CHECK(EvaluateOpenLoop(small, Logs(6)).miss_rate == 0.0);
}

TEST_CASE("short logs are skipped, mixed dt is rejected") {
  auto logs = Logs(3);
  logs.push_back(kdtest::StraightLog(5.0, 12));
  ExpertPlanner expert;
  const OpenLoopReport r = EvaluateOpenLoop(expert, logs);
  CHECK(r.sample_count == 3);
  CHECK(r.skipped == 1);
  kdtest::ExpectCode([&] { EvaluateOpenLoop(expert, {kdtest::StraightLog(5.0, 12)}); },
                     ErrorCode::kEmptyData);
  logs.push_back(kdtest::StraightLog(5.0, 41, 0.25));
  kdtest::ExpectCode([&] { CheckLogSet(logs); }, ErrorCode::kIncompatible);
  kdtest::ExpectCode([&] { EvaluateOpenLoop(expert, logs); }, ErrorCode::kIncompatible);
}

TEST_CASE("report JSON round trips") {
  ExpertPlanner expert;
  const OpenLoopReport r = EvaluateOpenLoop(expert, Logs(4));
  const nlohmann::json j = ToJson(r);
  CHECK(j["kind"] == "open_loop");
  CHECK(j["version"] == kReportVersion);
  CHECK(ToJson(OpenLoopFromJson(j)) == j);

  SimConfig cfg;
  const ClosedLoopSummary s = EvaluateClosedLoop(expert, Logs(4), cfg);
  const nlohmann::json cj = ToJson(s);
  CHECK(ToJson(ClosedLoopFromJson(cj)) == cj);
  CHECK(s.reports.size() == 4);
  CHECK(s.mean_score > 95.0);

  kdtest::TempDir dir;
  WriteJsonFile(j, dir / "r.json");
  CHECK(ReadJsonFile(dir / "r.json") == j);
  WriteTextFile(dir / "bad.json", "{ nope");
  kdtest::ExpectCode([&] { ReadJsonFile(dir / "bad.json"); }, ErrorCode::kIo);

  kdtest::ExpectCode([&] { OpenLoopFromJson(cj); }, ErrorCode::kBadMagic);
  nlohmann::json v = j;
  v["version"] = 2;
  kdtest::ExpectCode([&] { OpenLoopFromJson(v); }, ErrorCode::kVersionMismatch);
}

TEST_CASE("training set frames and labels") {
  const auto logs = Logs(2);
  const auto data = BuildTrainingSet(logs);
  // 21 frames: anchors 0..4 have 16 future frames.
  CHECK(data.size() == 2 * 5);
  for (const auto& s : data) {
    CHECK(s.x0.size() == kHorizon);
    CHECK(s.state.x == 0.0);
    CHECK(s.state.heading == 0.0);
    double one_hot = 0.0;
    for (std::size_t i = kCtxAction; i < kContextDim; ++i) one_hot += s.ctx[i];
    CHECK(one_hot == 1.0);
  }
}
