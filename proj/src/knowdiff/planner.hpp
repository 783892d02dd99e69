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

// Planners map an observation to a trajectory in the current ego frame.

#ifndef KNOWDIFF_PLANNER_HPP_
#define KNOWDIFF_PLANNER_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "knowdiff/decision.hpp"
#include "knowdiff/diffusion.hpp"
#include "knowdiff/library.hpp"

namespace knowdiff {

struct PlanRequest {
  const Observation* obs = nullptr;
  const DriveLog* log = nullptr;  // recorded scene, for log-aware planners
  double time = 0.0;              // seconds since the first log frame
  std::uint64_t key = 0;          // per-request randomness key
};

struct PlanOutput {
  Trajectory traj;  // kHorizon points at kStepSeconds, ego frame
  std::optional<DecisionRecord> decision;
  bool substituted = false;  // prior came from a neighbouring label
  int denoiser_calls = 0;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual PlanOutput Plan(const PlanRequest& req) = 0;
};

// Log future (ground truth), extrapolated at constant velocity past the end.
class ExpertPlanner final : public Planner {
 public:
  std::string name() const override { return "expert"; }
  PlanOutput Plan(const PlanRequest& req) override;
};

// Constant-speed line along the current heading.
class StraightPlanner final : public Planner {
 public:
  std::string name() const override { return "straight"; }
  PlanOutput Plan(const PlanRequest& req) override;
};

// Decision, lookup and alignment without denoising.
class PriorPlanner final : public Planner {
 public:
  PriorPlanner(std::shared_ptr<const PriorLibrary> lib, std::shared_ptr<DecisionProvider> provider,
               bool align = true);
  std::string name() const override { return "prior"; }
  PlanOutput Plan(const PlanRequest& req) override;

 private:
  std::shared_ptr<const PriorLibrary> lib_;
  std::shared_ptr<DecisionProvider> provider_;
  bool align_;
};

struct KnowDiffuserOptions {
  InferOptions infer;
  bool align = true;
  std::uint64_t seed = 0;
  std::size_t full_steps = 0;  // > 0 switches to the reference sampler
};

class KnowDiffuserPlanner final : public Planner {
 public:
  KnowDiffuserPlanner(std::shared_ptr<const PriorLibrary> lib,
                      std::shared_ptr<const Checkpoint> ckpt,
                      std::shared_ptr<DecisionProvider> provider, KnowDiffuserOptions opts);
  std::string name() const override;
  PlanOutput Plan(const PlanRequest& req) override;

 private:
  std::shared_ptr<const PriorLibrary> lib_;
  std::shared_ptr<const Checkpoint> ckpt_;
  std::shared_ptr<DecisionProvider> provider_;
  KnowDiffuserOptions opts_;
};

// Ego state of the log at `time`, linearly interpolated; constant-velocity
// extrapolation outside the recording.
EgoState LogEgoAt(const DriveLog& log, double time);

std::uint64_t MixKey(std::uint64_t a, std::uint64_t b);

}  // namespace knowdiff

#endif  // KNOWDIFF_PLANNER_HPP_
