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

#include "knowdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr char kCheckpointMagic[] = "KDCK";
constexpr char kContextLayout[] = "ctx32/v1";

constexpr double kHorizonSeconds = 8.0;
constexpr double kMinLookahead = 15.0;
constexpr double kMaxLookahead = 120.0;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

PoseMatrix StackInput(const PoseMatrix& state_row, const PoseMatrix& traj) {
  PoseMatrix in(traj.rows() + 1, 4);
  in.row(0) = state_row.row(0);
  in.bottomRows(traj.rows()) = traj;
  return in;
}

}  // namespace

PoseMatrix GaussianPoses(std::size_t rows, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  PoseMatrix m(static_cast<Eigen::Index>(rows), 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) m(r, c) = normal(rng);
  }
  return m;
}

ContextVector BuildContext(const Observation& obs, const MetaAction& action) {
  ContextVector ctx{};
  const double v = std::max(0.0, obs.ego.speed);
  double lookahead = std::clamp(kHorizonSeconds * v, kMinLookahead, kMaxLookahead);

  const SignalObservation* nearest = nullptr;
  for (const auto& s : obs.signals) {
    if (nearest == nullptr || s.distance_m < nearest->distance_m) nearest = &s;
  }
  if (nearest != nullptr) {
    ctx[kCtxSignal + static_cast<std::size_t>(nearest->state)] = 1.0;
    // A stop line inside the lookahead becomes the goal.
    if (nearest->state != SignalState::kGreen && nearest->distance_m < lookahead) {
      lookahead = nearest->distance_m;
    }
  }

  const Polyline route = RoutePolyline(obs.lanes);
  Waypoint goal{lookahead, 0.0};
  double goal_heading = 0.0;
  if (!route.empty()) {
    const double s = route.Project({obs.ego.x, obs.ego.y}).s + lookahead;
    goal = ToEgoFrame(route.PointAt(s), obs.ego);
    goal_heading = WrapAngle(route.HeadingAt(s) - obs.ego.heading);
  }
  ctx[kCtxGoal] = goal.x;
  ctx[kCtxGoal + 1] = goal.y;
  ctx[kCtxGoalHeading] = std::cos(goal_heading);
  ctx[kCtxGoalHeading + 1] = std::sin(goal_heading);
  ctx[kCtxSpeed] = v;
  ctx[kCtxAction + static_cast<std::size_t>(action.index())] = 1.0;
  return ctx;
}

double TrainingLoss(const Denoiser& model, const NoiseSchedule& sched, const PoseTrajectory& x0,
                    const EgoState& s, double t, const PoseMatrix& noise,
                    const ContextVector& ctx) {
  const PoseMatrix z0 = model.Normalize(x0);
  Denoiser::Example ex;
  ex.input = StackInput(model.NormalizeFrame(s.AsFrame()), ForwardNoise(sched, z0, t, noise));
  ex.t = t;
  ex.ctx = ctx;
  ex.target = z0;
  return model.Loss({ex}, nullptr);
}

void TrainConfig::Validate() const {
  if (steps == 0 || batch_size == 0) Fail(ErrorCode::kConfig, "steps and batch_size must be >= 1");
  if (!(learning_rate > 0.0)) Fail(ErrorCode::kConfig, "learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && adam_eps > 0.0)) {
    Fail(ErrorCode::kConfig, "adam moments must lie in [0, 1) and eps > 0");
  }
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
    Fail(ErrorCode::kConfig, "final_lr_fraction must lie in (0, 1]");
  }
}

double TrainConfig::LearningRateAt(std::size_t step) const {
  const double progress =
      steps <= 1 ? 0.0 : std::min(1.0, static_cast<double>(step) / static_cast<double>(steps - 1));
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return learning_rate * (final_lr_fraction + (1.0 - final_lr_fraction) * cosine);
}

void Train(Denoiser& model, const NoiseSchedule& sched, const std::vector<TrainingSample>& data,
           const TrainConfig& cfg, TrainState& state,
           const std::function<void(std::size_t, double)>& on_step) {
  cfg.Validate();
  sched.Validate();
  if (data.empty()) Fail(ErrorCode::kEmptyData, "training set is empty");
  auto& params = model.params();
  if (state.adam_m.empty()) {
    for (const auto& p : params) {
      state.adam_m.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      state.adam_v.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (state.adam_m.size() != params.size()) {
    Fail(ErrorCode::kIncompatible, "optimizer state does not match the model");
  }

  // Inputs are identical for every step; normalize once.
  std::vector<PoseMatrix> z0(data.size());
  std::vector<PoseMatrix> s0(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].x0.size() != model.arch().horizon) {
      Fail(ErrorCode::kShape, "training sample horizon does not match the model");
    }
    z0[i] = model.Normalize(data[i].x0);
    s0[i] = model.NormalizeFrame(data[i].state.AsFrame());
  }

  std::vector<Eigen::MatrixXd> grads;
  std::vector<Denoiser::Example> batch(cfg.batch_size);
  while (state.step < cfg.steps) {
    std::mt19937_64 rng(SplitMix64(cfg.seed ^ SplitMix64(state.step)));
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::uniform_real_distribution<double> time(sched.eps_t, 1.0);
    for (auto& ex : batch) {
      const std::size_t i = pick(rng);
      ex.t = time(rng);
      const PoseMatrix noise = GaussianPoses(model.arch().horizon, rng);
      ex.input = StackInput(s0[i], ForwardNoise(sched, z0[i], ex.t, noise));
      ex.ctx = data[i].ctx;
      ex.target = z0[i];
    }
    const double loss = model.Loss(batch, &grads);
    if (!std::isfinite(loss)) {
      Fail(ErrorCode::kNumeric, "non-finite loss at step " + std::to_string(state.step));
    }
    const double k = static_cast<double>(state.step + 1);
    const double c1 = 1.0 - std::pow(cfg.beta1, k);
    const double c2 = 1.0 - std::pow(cfg.beta2, k);
    const double lr = cfg.LearningRateAt(state.step);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& m = state.adam_m[p];
      auto& v = state.adam_v[p];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[p];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads[p].cwiseAbs2();
      params[p].value.array() -=
          lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
    }
    state.losses.push_back(loss);
    // Advance before the callback so an interrupt leaves a consistent state.
    ++state.step;
    if (on_step) on_step(state.step - 1, loss);
  }
}

void InferOptions::Validate() const {
  if (!(t1 > 0.0 && t1 < t2 && t2 <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "inference requires 0 < t1 < t2 <= 1");
  }
}

PoseMatrix TwoStepNoise(const NoiseSchedule& sched, const PoseMatrix& x, double t1, double t2,
                        const PoseMatrix& eps1, const PoseMatrix& eps2) {
  if (eps1.rows() != x.rows() || eps2.rows() != x.rows()) {
    Fail(ErrorCode::kShape, "noise shape does not match the trajectory");
  }
  const PoseMatrix x_t1 = x + sched.Sigma(t1) * eps1;
  return x_t1 + sched.Sigma(t2) * eps2;
}

Trajectory TruncatedInfer(const Denoiser& model, const NoiseSchedule& sched,
                          const Trajectory& prior, const EgoState& s, const ContextVector& ctx,
                          const InferOptions& opts, std::mt19937_64& rng, int* calls) {
  opts.Validate();
  if (prior.size() != model.arch().horizon) {
    Fail(ErrorCode::kShape, "prior horizon does not match the model");
  }
  const PoseMatrix x = model.Normalize(ExtendHeading(prior));
  const PoseMatrix eps1 = GaussianPoses(prior.size(), rng);
  const PoseMatrix eps2 = GaussianPoses(prior.size(), rng);
  const PoseMatrix x_t2 =
      opts.exact_marginal
          ? PoseMatrix(std::exp(-0.5 * sched.IntegratedBeta(opts.t2)) * x + sched.Sigma(opts.t2) * eps2)
          : TwoStepNoise(sched, x, opts.t1, opts.t2, eps1, eps2);
  const PoseMatrix state_row = model.NormalizeFrame(s.AsFrame());
  PoseMatrix x0_hat = model.Forward(StackInput(state_row, x_t2), opts.t2, ctx);
  int n = 1;
  if (opts.second_call) {
    // Deterministic step from t2 to t1 with the implied noise, then denoise again.
    const double a2 = std::sqrt(sched.AlphaBar(opts.t2));
    const double a1 = std::sqrt(sched.AlphaBar(opts.t1));
    const PoseMatrix eps_hat = (x_t2 - a2 * x0_hat) / sched.Sigma(opts.t2);
    const PoseMatrix x_t1 = a1 * x0_hat + sched.Sigma(opts.t1) * eps_hat;
    x0_hat = model.Forward(StackInput(state_row, x_t1), opts.t1, ctx);
    ++n;
  }
  if (calls != nullptr) *calls += n;
  return Positions(model.Denormalize(x0_hat, prior.dt));
}

Trajectory FullSample(const Denoiser& model, const NoiseSchedule& sched, const EgoState& s,
                      const ContextVector& ctx, std::size_t steps, std::mt19937_64& rng,
                      int* calls) {
  if (steps < 2) Fail(ErrorCode::kInvalidArgument, "full sampler needs >= 2 steps");
  const std::size_t horizon = model.arch().horizon;
  const PoseMatrix state_row = model.NormalizeFrame(s.AsFrame());
  PoseMatrix z = GaussianPoses(horizon, rng);
  PoseMatrix x0_hat;
  const double span = 1.0 - sched.eps_t;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = 1.0 - span * static_cast<double>(k) / static_cast<double>(steps - 1);
    x0_hat = model.Forward(StackInput(state_row, z), t, ctx);
    if (k + 1 < steps) {
      const double t_next = 1.0 - span * static_cast<double>(k + 1) / static_cast<double>(steps - 1);
      const PoseMatrix eps_hat = (z - std::sqrt(sched.AlphaBar(t)) * x0_hat) / sched.Sigma(t);
      z = std::sqrt(sched.AlphaBar(t_next)) * x0_hat + sched.Sigma(t_next) * eps_hat;
    }
  }
  if (calls != nullptr) *calls += static_cast<int>(steps);
  return Positions(model.Denormalize(x0_hat, kStepSeconds));
}

std::vector<std::uint8_t> SerializeCheckpoint(const Checkpoint& ckpt) {
  BinaryWriter w;
  const DenoiserArch& a = ckpt.model.arch();
  w.PutString(kContextLayout);
  w.PutU64(a.horizon);
  w.PutU64(a.width);
  w.PutU64(a.layers);
  w.PutF64(a.position_scale);
  w.PutF64(a.speed_scale);
  w.PutU32(a.renormalize_heading ? 1 : 0);
  w.PutF64(ckpt.sched.beta_min);
  w.PutF64(ckpt.sched.beta_max);
  w.PutF64(ckpt.sched.eps_t);
  const auto& params = ckpt.model.params();
  w.PutU64(params.size());
  auto put_matrix = [&w](const Eigen::MatrixXd& m) {
    w.PutU64(static_cast<std::uint64_t>(m.rows()));
    w.PutU64(static_cast<std::uint64_t>(m.cols()));
    w.PutF64Array(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
  };
  for (const auto& p : params) {
    w.PutString(p.name);
    put_matrix(p.value);
  }
  const TrainState& st = ckpt.train;
  w.PutU64(st.step);
  w.PutU64(st.adam_m.size());
  for (std::size_t i = 0; i < st.adam_m.size(); ++i) {
    put_matrix(st.adam_m[i]);
    put_matrix(st.adam_v[i]);
  }
  w.PutF64Array(st.losses);
  return SealContainer(kCheckpointMagic, kCheckpointVersion, w.bytes());
}

Checkpoint DeserializeCheckpoint(std::span<const std::uint8_t> file) {
  const auto payload = OpenContainer(file, kCheckpointMagic, kCheckpointVersion);
  BinaryReader r(payload);
  if (r.GetString() != kContextLayout) {
    Fail(ErrorCode::kIncompatible, "checkpoint uses a different context layout");
  }
  DenoiserArch a;
  a.horizon = r.GetU64();
  a.width = r.GetU64();
  a.layers = r.GetU64();
  a.position_scale = r.GetF64();
  a.speed_scale = r.GetF64();
  a.renormalize_heading = r.GetU32() != 0;
  if (a.horizon > 4096 || a.width > 65536 || a.layers > 1024) {
    Fail(ErrorCode::kIncompatible, "checkpoint architecture out of range");
  }
  a.Validate();
  Checkpoint ckpt;
  ckpt.sched.beta_min = r.GetF64();
  ckpt.sched.beta_max = r.GetF64();
  ckpt.sched.eps_t = r.GetF64();
  ckpt.sched.Validate();
  auto get_matrix = [&r]() {
    const auto rows = static_cast<Eigen::Index>(r.GetU64());
    const auto cols = static_cast<Eigen::Index>(r.GetU64());
    const std::vector<double> data = r.GetF64Array();
    if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != data.size()) {
      Fail(ErrorCode::kTruncated, "checkpoint tensor size mismatch");
    }
    return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols));
  };
  const auto count = r.GetU64();
  if (count > 4096) Fail(ErrorCode::kIncompatible, "checkpoint tensor count out of range");
  std::vector<NamedTensor> params;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.GetString();
    t.value = get_matrix();
    params.push_back(std::move(t));
  }
  ckpt.model = Denoiser::FromParams(a, std::move(params));
  ckpt.train.step = r.GetU64();
  const auto moments = r.GetU64();
  if (moments != 0 && moments != count) {
    Fail(ErrorCode::kIncompatible, "optimizer state does not match the parameters");
  }
  for (std::uint64_t i = 0; i < moments; ++i) {
    ckpt.train.adam_m.push_back(get_matrix());
    ckpt.train.adam_v.push_back(get_matrix());
  }
  ckpt.train.losses = r.GetF64Array();
  r.ExpectEnd();
  return ckpt;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  return DeserializeCheckpoint(ReadFileBytes(path));
}

}  // namespace knowdiff
