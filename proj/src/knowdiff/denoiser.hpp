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

// Residual MLP denoiser predicting the clean trajectory (x0 target).
//
// All matrices handed to the model live in diffusion space: positions divided
// by `position_scale`, heading vectors unscaled. Row 0 of an input is the
// current state, rows 1..T the noisy trajectory.

#ifndef KNOWDIFF_DENOISER_HPP_
#define KNOWDIFF_DENOISER_HPP_

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "knowdiff/schedule.hpp"
#include "knowdiff/trajectory.hpp"

namespace knowdiff {

inline constexpr std::size_t kContextDim = 32;
inline constexpr std::size_t kTimeEmbedDim = 32;

// Physical-unit context. Layout:
//   [0, 2)  next-goal offset, ego frame, m
//   [2, 4)  goal heading, unit vector
//   4       current speed, m/s
//   [5, 8)  signal one-hot (red, yellow, green); zero when no signal ahead
//   [8, 32) meta-action one-hot
using ContextVector = std::array<double, kContextDim>;
inline constexpr std::size_t kCtxGoal = 0;
inline constexpr std::size_t kCtxGoalHeading = 2;
inline constexpr std::size_t kCtxSpeed = 4;
inline constexpr std::size_t kCtxSignal = 5;
inline constexpr std::size_t kCtxAction = 8;

struct DenoiserArch {
  std::size_t horizon = kHorizon;
  std::size_t width = 256;
  std::size_t layers = 3;  // residual blocks
  double position_scale = 20.0;
  double speed_scale = 10.0;
  bool renormalize_heading = true;

  std::size_t input_dim() const { return (horizon + 1) * 4 + kTimeEmbedDim + kContextDim; }
  std::size_t output_dim() const { return horizon * 4; }
  void Validate() const;
};

// Sinusoidal embedding of 1000 * t.
std::array<double, kTimeEmbedDim> TimeEmbedding(double t);

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

class Denoiser {
 public:
  Denoiser() = default;
  // Random hidden layers, zero output layer.
  static Denoiser Create(const DenoiserArch& arch, std::uint64_t seed);
  // kIncompatible when names or shapes disagree with `arch`.
  static Denoiser FromParams(const DenoiserArch& arch, std::vector<NamedTensor> params);

  const DenoiserArch& arch() const { return arch_; }
  std::vector<NamedTensor>& params() { return params_; }
  const std::vector<NamedTensor>& params() const { return params_; }
  std::size_t ParameterCount() const;

  // Prediction for one input of T+1 rows; kNumeric with the layer name when
  // an activation is non-finite.
  PoseMatrix Forward(const PoseMatrix& input, double t, const ContextVector& ctx) const;

  struct Example {
    PoseMatrix input;   // T+1 rows
    double t = 0.0;
    ContextVector ctx{};
    PoseMatrix target;  // T rows
  };

  // Mean over the batch of the per-example MSE. When `grads` is non-null it
  // receives d(loss)/d(param), aligned with params().
  double Loss(const std::vector<Example>& batch, std::vector<Eigen::MatrixXd>* grads) const;

  // Diffusion-space conversion of physical poses.
  PoseMatrix Normalize(const PoseTrajectory& poses) const;
  PoseMatrix NormalizeFrame(const PoseFrame& frame) const;
  PoseTrajectory Denormalize(const PoseMatrix& m, double dt) const;

 private:
  Eigen::MatrixXd BuildInputs(const std::vector<const PoseMatrix*>& inputs,
                              const std::vector<double>& ts,
                              const std::vector<const ContextVector*>& ctxs) const;

  DenoiserArch arch_;
  std::vector<NamedTensor> params_;
};

}  // namespace knowdiff

#endif  // KNOWDIFF_DENOISER_HPP_
