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

// Training and inference around the denoiser.

#ifndef KNOWDIFF_DIFFUSION_HPP_
#define KNOWDIFF_DIFFUSION_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "knowdiff/denoiser.hpp"
#include "knowdiff/meta_action.hpp"
#include "knowdiff/scene.hpp"
#include "knowdiff/schedule.hpp"

namespace knowdiff {

// Context for planning from `obs` under `action`.
ContextVector BuildContext(const Observation& obs, const MetaAction& action);

// One supervised example in the ego frame of its current state.
struct TrainingSample {
  PoseTrajectory x0;  // T frames
  EgoState state;     // current state in its own frame (pose at the origin)
  ContextVector ctx{};
};

// Per-example x0-prediction MSE over all T*4 entries, in diffusion space.
double TrainingLoss(const Denoiser& model, const NoiseSchedule& sched,
                    const PoseTrajectory& x0, const EgoState& s, double t,
                    const PoseMatrix& noise, const ContextVector& ctx);

struct TrainConfig {
  std::size_t steps = 2000;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Cosine decay from learning_rate to learning_rate * final_lr_fraction.
  double final_lr_fraction = 0.05;
  std::uint64_t seed = 7;
  double LearningRateAt(std::size_t step) const;
  void Validate() const;
};

struct TrainState {
  std::size_t step = 0;
  std::vector<Eigen::MatrixXd> adam_m;
  std::vector<Eigen::MatrixXd> adam_v;
  std::vector<double> losses;  // one per completed step
};

// Runs steps [state.step, cfg.steps). Every step draws its examples, t and
// noise from a generator seeded by (cfg.seed, step), so a resumed run
// reproduces an uninterrupted one. kNumeric on a non-finite loss.
void Train(Denoiser& model, const NoiseSchedule& sched, const std::vector<TrainingSample>& data,
           const TrainConfig& cfg, TrainState& state,
           const std::function<void(std::size_t, double)>& on_step = {});

struct InferOptions {
  double t1 = 0.05;
  double t2 = 0.10;
  bool exact_marginal = false;  // noise as x_t2 = sqrt(abar) x + sigma eps
  bool second_call = false;     // extra denoiser pass at t1
  void Validate() const;
};

// x + sigma(t1) eps1 + sigma(t2) eps2.
PoseMatrix TwoStepNoise(const NoiseSchedule& sched, const PoseMatrix& x, double t1, double t2,
                        const PoseMatrix& eps1, const PoseMatrix& eps2);

// Prior (ego frame) -> planned positions (ego frame). `calls` counts
// denoiser evaluations when non-null.
Trajectory TruncatedInfer(const Denoiser& model, const NoiseSchedule& sched,
                          const Trajectory& prior, const EgoState& s, const ContextVector& ctx,
                          const InferOptions& opts, std::mt19937_64& rng, int* calls = nullptr);

// Reference deterministic sampler from pure noise over `steps` evaluations.
Trajectory FullSample(const Denoiser& model, const NoiseSchedule& sched, const EgoState& s,
                      const ContextVector& ctx, std::size_t steps, std::mt19937_64& rng,
                      int* calls = nullptr);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Denoiser model;
  NoiseSchedule sched;
  TrainState train;
};

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> file);
void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Standard normal matrix with `rows` frames.
PoseMatrix GaussianPoses(std::size_t rows, std::mt19937_64& rng);

}  // namespace knowdiff

#endif  // KNOWDIFF_DIFFUSION_HPP_
