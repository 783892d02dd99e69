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

#include "knowdiff/planner.hpp"

#include <cmath>

#include "knowdiff/bridge.hpp"
#include "knowdiff/error.hpp"

namespace knowdiff {

std::uint64_t MixKey(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

EgoState LogEgoAt(const DriveLog& log, double time) {
  if (log.frames.empty()) Fail(ErrorCode::kEmptyData, "log has no frames");
  const double last_t = log.duration();
  if (time <= 0.0 || time >= last_t) {
    const EgoState& e = time <= 0.0 ? log.frames.front().ego : log.frames.back().ego;
    const double dt = time <= 0.0 ? time : time - last_t;
    return {e.x + e.speed * std::cos(e.heading) * dt, e.y + e.speed * std::sin(e.heading) * dt,
            e.heading, e.speed};
  }
  const double u = time / log.dt;
  const auto k = std::min(static_cast<std::size_t>(u), log.frames.size() - 2);
  const double w = u - static_cast<double>(k);
  const EgoState& a = log.frames[k].ego;
  const EgoState& b = log.frames[k + 1].ego;
  return {a.x + w * (b.x - a.x), a.y + w * (b.y - a.y),
          WrapAngle(a.heading + w * WrapAngle(b.heading - a.heading)),
          a.speed + w * (b.speed - a.speed)};
}

PlanOutput ExpertPlanner::Plan(const PlanRequest& req) {
  if (req.log == nullptr || req.obs == nullptr) {
    Fail(ErrorCode::kInvalidArgument, "expert planner needs the recorded log");
  }
  PlanOutput out;
  out.traj.dt = kStepSeconds;
  for (std::size_t k = 0; k < kHorizon; ++k) {
    const EgoState e = LogEgoAt(*req.log, req.time + kStepSeconds * static_cast<double>(k + 1));
    out.traj.points.push_back(ToEgoFrame(Waypoint{e.x, e.y}, req.obs->ego));
  }
  return out;
}

PlanOutput StraightPlanner::Plan(const PlanRequest& req) {
  if (req.obs == nullptr) Fail(ErrorCode::kInvalidArgument, "missing observation");
  PlanOutput out;
  out.traj.dt = kStepSeconds;
  const double v = std::max(0.0, req.obs->ego.speed);
  for (std::size_t k = 0; k < kHorizon; ++k) {
    out.traj.points.push_back({v * kStepSeconds * static_cast<double>(k + 1), 0.0});
  }
  return out;
}

PriorPlanner::PriorPlanner(std::shared_ptr<const PriorLibrary> lib,
                           std::shared_ptr<DecisionProvider> provider, bool align)
    : lib_(std::move(lib)), provider_(std::move(provider)), align_(align) {
  if (!lib_ || !provider_) Fail(ErrorCode::kInvalidArgument, "prior planner needs library and provider");
}

PlanOutput PriorPlanner::Plan(const PlanRequest& req) {
  if (req.obs == nullptr) Fail(ErrorCode::kInvalidArgument, "missing observation");
  PlanOutput out;
  out.decision = provider_->Decide(*req.obs);
  const LookupResult hit = Lookup(*lib_, out.decision->action);
  out.substituted = hit.substituted;
  out.traj = AlignPrior(hit.entry->prior, req.obs->ego, align_);
  return out;
}

KnowDiffuserPlanner::KnowDiffuserPlanner(std::shared_ptr<const PriorLibrary> lib,
                                         std::shared_ptr<const Checkpoint> ckpt,
                                         std::shared_ptr<DecisionProvider> provider,
                                         KnowDiffuserOptions opts)
    : lib_(std::move(lib)), ckpt_(std::move(ckpt)), provider_(std::move(provider)), opts_(opts) {
  if (!lib_ || !ckpt_ || !provider_) {
    Fail(ErrorCode::kInvalidArgument, "knowdiffuser planner needs library, checkpoint and provider");
  }
  opts_.infer.Validate();
  if (lib_->horizon != ckpt_->model.arch().horizon || lib_->dt != kStepSeconds) {
    Fail(ErrorCode::kIncompatible, "library and checkpoint horizons differ");
  }
}

std::string KnowDiffuserPlanner::name() const {
  return opts_.full_steps > 0 ? "knowdiffuser-full" : "knowdiffuser";
}

PlanOutput KnowDiffuserPlanner::Plan(const PlanRequest& req) {
  if (req.obs == nullptr) Fail(ErrorCode::kInvalidArgument, "missing observation");
  const Observation& obs = *req.obs;
  PlanOutput out;
  out.decision = provider_->Decide(obs);
  const MetaAction action = out.decision->action;
  const LookupResult hit = Lookup(*lib_, action);
  out.substituted = hit.substituted;
  const Trajectory prior = AlignPrior(hit.entry->prior, obs.ego, opts_.align);
  const ContextVector ctx = BuildContext(obs, action);
  const EgoState s{0.0, 0.0, 0.0, obs.ego.speed};
  std::mt19937_64 rng(MixKey(opts_.seed, req.key));
  if (opts_.full_steps > 0) {
    out.traj = FullSample(ckpt_->model, ckpt_->sched, s, ctx, opts_.full_steps, rng,
                          &out.denoiser_calls);
  } else {
    out.traj = TruncatedInfer(ckpt_->model, ckpt_->sched, prior, s, ctx, opts_.infer, rng,
                              &out.denoiser_calls);
  }
  return out;
}

}  // namespace knowdiff
