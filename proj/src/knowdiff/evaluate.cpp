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

#include "knowdiff/evaluate.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <fstream>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

using nlohmann::json;

json PointsJson(const Trajectory& t) {
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back({p.x, p.y});
  return pts;
}

Trajectory PointsFromJson(const json& j, double dt) {
  Trajectory t{{}, dt};
  for (const auto& p : j) t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return t;
}

void CheckHeader(const json& j, std::string_view kind) {
  if (!j.is_object() || j.value("kind", "") != kind) {
    Fail(ErrorCode::kBadMagic, "not a " + std::string(kind) + " report");
  }
  if (j.value("version", 0u) != kReportVersion) {
    Fail(ErrorCode::kVersionMismatch, "unsupported report version");
  }
}

template <typename F>
auto Guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIo, std::string("malformed report: ") + e.what());
  }
}

}  // namespace

void CheckLogSet(const std::vector<DriveLog>& logs) {
  for (const auto& log : logs) {
    if (std::abs(log.dt - kStepSeconds) > 1e-9) {
      Fail(ErrorCode::kIncompatible,
           "log " + log.kind + " has dt " + std::to_string(log.dt) + ", expected " +
               std::to_string(kStepSeconds));
    }
  }
}

OpenLoopReport EvaluateOpenLoop(Planner& planner, const std::vector<DriveLog>& logs) {
  CheckLogSet(logs);
  OpenLoopReport report;
  report.planner = planner.name();
  std::vector<Trajectory> preds;
  std::vector<Trajectory> gts;
  for (const auto& log : logs) {
    if (log.duration() < kOpenLoopLogSeconds - 1e-9) {
      spdlog::warn("skipping {}-{}: {:.1f} s is shorter than {:.0f} s", log.kind, log.seed,
                   log.duration(), kOpenLoopLogSeconds);
      ++report.skipped;
      continue;
    }
    const Observation obs = ObserveLogFrame(log, kObservedFrame);
    const PlanRequest req{&obs, &log, static_cast<double>(kObservedFrame) * log.dt, log.seed};
    PlanOutput out = planner.Plan(req);
    OpenLoopSample s;
    s.scenario = log.kind + "-" + std::to_string(log.seed);
    s.gt = LogEgoTrajectory(log, kObservedFrame + 1, kHorizon, log.frames[kObservedFrame].ego);
    s.pred = std::move(out.traj);
    s.ade = Ade(s.pred, s.gt);
    s.fde_3s = FdeAt(s.pred, s.gt, 3.0);
    s.fde_5s = FdeAt(s.pred, s.gt, 5.0);
    s.fde_8s = FdeAt(s.pred, s.gt, 8.0);
    s.miss = MissRate({s.pred}, {s.gt}) > 0.0;
    if (out.decision) s.decision = out.decision->action.Label();
    s.substituted = out.substituted;
    s.denoiser_calls = out.denoiser_calls;
    report.denoiser_calls += static_cast<std::size_t>(out.denoiser_calls);
    preds.push_back(s.pred);
    gts.push_back(s.gt);
    report.samples.push_back(std::move(s));
  }
  if (report.samples.empty()) Fail(ErrorCode::kEmptyData, "no log long enough for open-loop evaluation");
  const double n = static_cast<double>(report.samples.size());
  for (const auto& s : report.samples) {
    report.ade_8s += s.ade / n;
    report.fde_3s += s.fde_3s / n;
    report.fde_5s += s.fde_5s / n;
    report.fde_8s += s.fde_8s / n;
  }
  report.miss_rate = MissRate(preds, gts);
  report.sample_count = report.samples.size();
  return report;
}

ClosedLoopSummary EvaluateClosedLoop(Planner& planner, const std::vector<DriveLog>& logs,
                                     const SimConfig& cfg) {
  CheckLogSet(logs);
  if (logs.empty()) Fail(ErrorCode::kEmptyData, "no scenarios");
  ClosedLoopSummary sum;
  sum.planner = planner.name();
  sum.reactive = cfg.reactive;
  for (const auto& log : logs) {
    ClosedLoopReport r = RolloutClosedLoop(planner, log, cfg);
    if (r.planner_failed) {
      spdlog::warn("{}", r.diagnostic);
      ++sum.failed;
    }
    sum.mean_score += r.score;
    sum.mean_progress += r.progress_ratio;
    sum.collisions += r.collisions;
    sum.drivable_violations += r.drivable_violations;
    sum.comfort_violations += r.comfort_violations;
    sum.reports.push_back(std::move(r));
  }
  sum.mean_score /= static_cast<double>(logs.size());
  sum.mean_progress /= static_cast<double>(logs.size());
  return sum;
}

json ToJson(const OpenLoopReport& r) {
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"scenario", s.scenario}, {"ade", s.ade}, {"fde_3s", s.fde_3s},
                       {"fde_5s", s.fde_5s}, {"fde_8s", s.fde_8s}, {"miss", s.miss},
                       {"decision", s.decision}, {"substituted", s.substituted},
                       {"denoiser_calls", s.denoiser_calls}, {"pred", PointsJson(s.pred)},
                       {"gt", PointsJson(s.gt)}});
  }
  return {{"kind", "open_loop"}, {"version", kReportVersion}, {"planner", r.planner},
          {"ade_8s", r.ade_8s}, {"fde_3s", r.fde_3s}, {"fde_5s", r.fde_5s},
          {"fde_8s", r.fde_8s}, {"miss_rate", r.miss_rate}, {"sample_count", r.sample_count},
          {"skipped", r.skipped}, {"denoiser_calls", r.denoiser_calls}, {"samples", samples}};
}

json ToJson(const ClosedLoopReport& r) {
  return {{"scenario", r.scenario}, {"score", r.score}, {"collisions", r.collisions},
          {"drivable_violations", r.drivable_violations}, {"progress_ratio", r.progress_ratio},
          {"comfort_violations", r.comfort_violations},
          {"comfort_ok_fraction", r.comfort_ok_fraction}, {"reactive", r.reactive},
          {"planner_failed", r.planner_failed}, {"diagnostic", r.diagnostic}};
}

json ToJson(const ClosedLoopSummary& r) {
  json reports = json::array();
  for (const auto& x : r.reports) reports.push_back(ToJson(x));
  return {{"kind", "closed_loop"}, {"version", kReportVersion}, {"planner", r.planner},
          {"reactive", r.reactive}, {"mean_score", r.mean_score}, {"collisions", r.collisions},
          {"drivable_violations", r.drivable_violations},
          {"comfort_violations", r.comfort_violations}, {"mean_progress", r.mean_progress},
          {"failed", r.failed}, {"reports", reports}};
}

OpenLoopReport OpenLoopFromJson(const json& j) {
  CheckHeader(j, "open_loop");
  return Guard([&] {
    OpenLoopReport r;
    r.planner = j.at("planner").get<std::string>();
    r.ade_8s = j.at("ade_8s").get<double>();
    r.fde_3s = j.at("fde_3s").get<double>();
    r.fde_5s = j.at("fde_5s").get<double>();
    r.fde_8s = j.at("fde_8s").get<double>();
    r.miss_rate = j.at("miss_rate").get<double>();
    r.sample_count = j.at("sample_count").get<std::size_t>();
    r.skipped = j.at("skipped").get<std::size_t>();
    r.denoiser_calls = j.at("denoiser_calls").get<std::size_t>();
    for (const auto& s : j.at("samples")) {
      OpenLoopSample o;
      o.scenario = s.at("scenario").get<std::string>();
      o.ade = s.at("ade").get<double>();
      o.fde_3s = s.at("fde_3s").get<double>();
      o.fde_5s = s.at("fde_5s").get<double>();
      o.fde_8s = s.at("fde_8s").get<double>();
      o.miss = s.at("miss").get<bool>();
      o.decision = s.at("decision").get<std::string>();
      o.substituted = s.at("substituted").get<bool>();
      o.denoiser_calls = s.at("denoiser_calls").get<int>();
      o.pred = PointsFromJson(s.at("pred"), kStepSeconds);
      o.gt = PointsFromJson(s.at("gt"), kStepSeconds);
      r.samples.push_back(std::move(o));
    }
    return r;
  });
}

ClosedLoopSummary ClosedLoopFromJson(const json& j) {
  CheckHeader(j, "closed_loop");
  return Guard([&] {
    ClosedLoopSummary r;
    r.planner = j.at("planner").get<std::string>();
    r.reactive = j.at("reactive").get<bool>();
    r.mean_score = j.at("mean_score").get<double>();
    r.collisions = j.at("collisions").get<std::size_t>();
    r.drivable_violations = j.at("drivable_violations").get<std::size_t>();
    r.comfort_violations = j.at("comfort_violations").get<std::size_t>();
    r.mean_progress = j.at("mean_progress").get<double>();
    r.failed = j.at("failed").get<std::size_t>();
    for (const auto& x : j.at("reports")) {
      ClosedLoopReport c;
      c.scenario = x.at("scenario").get<std::string>();
      c.score = x.at("score").get<double>();
      c.collisions = x.at("collisions").get<std::size_t>();
      c.drivable_violations = x.at("drivable_violations").get<std::size_t>();
      c.progress_ratio = x.at("progress_ratio").get<double>();
      c.comfort_violations = x.at("comfort_violations").get<std::size_t>();
      c.comfort_ok_fraction = x.at("comfort_ok_fraction").get<double>();
      c.reactive = x.at("reactive").get<bool>();
      c.planner_failed = x.at("planner_failed").get<bool>();
      c.diagnostic = x.at("diagnostic").get<std::string>();
      r.reports.push_back(std::move(c));
    }
    return r;
  });
}

void WriteJsonFile(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) Fail(ErrorCode::kIo, "failed writing " + path.string());
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Fail(ErrorCode::kIo, "malformed JSON in " + path.string());
  return j;
}

std::vector<TrainingSample> BuildTrainingSet(const std::vector<DriveLog>& logs) {
  CheckLogSet(logs);
  std::vector<TrainingSample> out;
  for (const auto& log : logs) {
    for (std::size_t k = 0; k + kHorizon < log.frames.size(); ++k) {
      const EgoState& anchor = log.frames[k].ego;
      TrainingSample s;
      s.x0 = LogEgoPoses(log, k + 1, kHorizon, anchor);
      const MetaAction label = Classify(ExtractFeatures(Positions(s.x0)));
      s.state = EgoState{0.0, 0.0, 0.0, anchor.speed};
      s.ctx = BuildContext(ObserveLogFrame(log, k), label);
      out.push_back(std::move(s));
    }
  }
  if (out.empty()) Fail(ErrorCode::kEmptyData, "no log has a full planning horizon");
  return out;
}

}  // namespace knowdiff
