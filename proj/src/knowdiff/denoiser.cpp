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

#include "knowdiff/denoiser.hpp"

#include <cmath>
#include <random>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr double kTinyNorm = 1e-12;

Eigen::MatrixXd Silu(const Eigen::MatrixXd& h) {
  return h.unaryExpr([](double x) { return x / (1.0 + std::exp(-x)); });
}

Eigen::MatrixXd SiluGrad(const Eigen::MatrixXd& h) {
  return h.unaryExpr([](double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
  });
}

void CheckFinite(const Eigen::MatrixXd& m, const std::string& layer) {
  if (!m.allFinite()) Fail(ErrorCode::kNumeric, "non-finite activation in layer " + layer);
}

struct Cache {
  std::vector<Eigen::MatrixXd> h;  // pre-activations h_0..h_L
  Eigen::MatrixXd a_last;          // silu(h_L)
  Eigen::MatrixXd y;               // output before renormalization
  Eigen::MatrixXd out;
};

}  // namespace

void DenoiserArch::Validate() const {
  if (horizon < 2 || width == 0 || layers == 0) {
    Fail(ErrorCode::kConfig, "denoiser needs horizon >= 2, width >= 1, layers >= 1");
  }
  if (!(position_scale > 0.0) || !(speed_scale > 0.0)) {
    Fail(ErrorCode::kConfig, "denoiser scales must be > 0");
  }
}

std::array<double, kTimeEmbedDim> TimeEmbedding(double t) {
  std::array<double, kTimeEmbedDim> e{};
  constexpr std::size_t half = kTimeEmbedDim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    e[i] = std::sin(1000.0 * t * freq);
    e[half + i] = std::cos(1000.0 * t * freq);
  }
  return e;
}

Denoiser Denoiser::Create(const DenoiserArch& arch, std::uint64_t seed) {
  arch.Validate();
  Denoiser d;
  d.arch_ = arch;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto gaussian = [&](std::size_t rows, std::size_t cols, double stddev) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = stddev * normal(rng);
    }
    return m;
  };
  const std::size_t w = arch.width;
  const double block_std = 1.0 / std::sqrt(static_cast<double>(w * arch.layers));
  d.params_.push_back({"in.w", gaussian(w, arch.input_dim(), 1.0 / std::sqrt(arch.input_dim()))});
  d.params_.push_back({"in.b", Eigen::MatrixXd::Zero(w, 1)});
  for (std::size_t l = 0; l < arch.layers; ++l) {
    d.params_.push_back({"block" + std::to_string(l) + ".w", gaussian(w, w, block_std)});
    d.params_.push_back({"block" + std::to_string(l) + ".b", Eigen::MatrixXd::Zero(w, 1)});
  }
  d.params_.push_back({"out.w", Eigen::MatrixXd::Zero(arch.output_dim(), w)});
  d.params_.push_back({"out.b", Eigen::MatrixXd::Zero(arch.output_dim(), 1)});
  return d;
}

Denoiser Denoiser::FromParams(const DenoiserArch& arch, std::vector<NamedTensor> params) {
  const Denoiser shape = Create(arch, 0);
  if (params.size() != shape.params_.size()) {
    Fail(ErrorCode::kIncompatible, "parameter count does not match the architecture");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& want = shape.params_[i];
    const auto& got = params[i];
    if (got.name != want.name || got.value.rows() != want.value.rows() ||
        got.value.cols() != want.value.cols()) {
      Fail(ErrorCode::kIncompatible, "parameter " + got.name + " does not match " + want.name);
    }
    if (!got.value.allFinite()) Fail(ErrorCode::kNumeric, "parameter " + got.name + " is not finite");
  }
  Denoiser d;
  d.arch_ = arch;
  d.params_ = std::move(params);
  return d;
}

std::size_t Denoiser::ParameterCount() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

PoseMatrix Denoiser::Normalize(const PoseTrajectory& poses) const {
  PoseMatrix m(static_cast<Eigen::Index>(poses.size()), 4);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    m.row(static_cast<Eigen::Index>(k)) = NormalizeFrame(poses.frames[k]);
  }
  return m;
}

PoseMatrix Denoiser::NormalizeFrame(const PoseFrame& f) const {
  PoseMatrix m(1, 4);
  m << f.x / arch_.position_scale, f.y / arch_.position_scale, f.hx, f.hy;
  return m;
}

PoseTrajectory Denoiser::Denormalize(const PoseMatrix& m, double dt) const {
  PoseTrajectory out;
  out.dt = dt;
  out.frames.resize(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    out.frames[static_cast<std::size_t>(k)] = {m(k, 0) * arch_.position_scale,
                                               m(k, 1) * arch_.position_scale, m(k, 2), m(k, 3)};
  }
  return out;
}

Eigen::MatrixXd Denoiser::BuildInputs(const std::vector<const PoseMatrix*>& inputs,
                                      const std::vector<double>& ts,
                                      const std::vector<const ContextVector*>& ctxs) const {
  const auto rows = static_cast<Eigen::Index>(arch_.horizon + 1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(arch_.input_dim()),
                    static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    const PoseMatrix& in = *inputs[b];
    if (in.rows() != rows) {
      Fail(ErrorCode::kShape, "denoiser input needs " + std::to_string(rows) + " frames, got " +
                                  std::to_string(in.rows()));
    }
    if (!in.allFinite()) Fail(ErrorCode::kNumeric, "denoiser input is not finite");
    const double t = ts[b];
    if (!(t > 0.0 && t <= 1.0)) Fail(ErrorCode::kDomain, "denoiser: t must lie in (0, 1]");
    const auto col = static_cast<Eigen::Index>(b);
    Eigen::Index r = 0;
    for (Eigen::Index k = 0; k < rows; ++k) {
      for (Eigen::Index c = 0; c < 4; ++c) x(r++, col) = in(k, c);
    }
    for (double v : TimeEmbedding(t)) x(r++, col) = v;
    const ContextVector& ctx = *ctxs[b];
    for (std::size_t i = 0; i < kContextDim; ++i) {
      double v = ctx[i];
      if (i < kCtxGoalHeading) v /= arch_.position_scale;
      if (i == kCtxSpeed) v /= arch_.speed_scale;
      if (!std::isfinite(v)) Fail(ErrorCode::kNumeric, "context is not finite");
      x(r++, col) = v;
    }
  }
  return x;
}

namespace {

void RunForward(const DenoiserArch& arch, const std::vector<NamedTensor>& p,
                const Eigen::MatrixXd& x, Cache& cache) {
  const std::size_t L = arch.layers;
  cache.h.assign(L + 1, Eigen::MatrixXd());
  cache.h[0] = (p[0].value * x).colwise() + p[1].value.col(0);
  CheckFinite(cache.h[0], p[0].name);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& w = p[2 + 2 * l].value;
    const auto& b = p[3 + 2 * l].value;
    cache.h[l + 1] = cache.h[l] + ((w * Silu(cache.h[l])).colwise() + b.col(0));
    CheckFinite(cache.h[l + 1], p[2 + 2 * l].name);
  }
  const auto& wo = p[2 + 2 * L].value;
  const auto& bo = p[3 + 2 * L].value;
  cache.a_last = Silu(cache.h[L]);
  // Skip path: the noisy-trajectory slice of the input (frames 1..T).
  const auto out_dim = static_cast<Eigen::Index>(arch.output_dim());
  cache.y = ((wo * cache.a_last).colwise() + bo.col(0)) + x.middleRows(4, out_dim);
  CheckFinite(cache.y, p[2 + 2 * L].name);
  cache.out = cache.y;
  if (arch.renormalize_heading) {
    for (Eigen::Index b = 0; b < cache.y.cols(); ++b) {
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(arch.horizon); ++k) {
        const double hx = cache.y(4 * k + 2, b);
        const double hy = cache.y(4 * k + 3, b);
        const double n = std::hypot(hx, hy);
        if (n > kTinyNorm) {
          cache.out(4 * k + 2, b) = hx / n;
          cache.out(4 * k + 3, b) = hy / n;
        } else {
          cache.out(4 * k + 2, b) = 1.0;
          cache.out(4 * k + 3, b) = 0.0;
        }
      }
    }
  }
}

}  // namespace

PoseMatrix Denoiser::Forward(const PoseMatrix& input, double t, const ContextVector& ctx) const {
  const Eigen::MatrixXd x = BuildInputs({&input}, {t}, {&ctx});
  Cache cache;
  RunForward(arch_, params_, x, cache);
  PoseMatrix out(static_cast<Eigen::Index>(arch_.horizon), 4);
  for (Eigen::Index k = 0; k < out.rows(); ++k) {
    for (Eigen::Index c = 0; c < 4; ++c) out(k, c) = cache.out(4 * k + c, 0);
  }
  return out;
}

double Denoiser::Loss(const std::vector<Example>& batch,
                      std::vector<Eigen::MatrixXd>* grads) const {
  if (batch.empty()) Fail(ErrorCode::kEmptyData, "loss over an empty batch");
  std::vector<const PoseMatrix*> inputs;
  std::vector<double> ts;
  std::vector<const ContextVector*> ctxs;
  const auto horizon = static_cast<Eigen::Index>(arch_.horizon);
  const auto out_dim = static_cast<Eigen::Index>(arch_.output_dim());
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd target(out_dim, n);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& ex = batch[b];
    if (ex.target.rows() != horizon) Fail(ErrorCode::kShape, "target must have T frames");
    inputs.push_back(&ex.input);
    ts.push_back(ex.t);
    ctxs.push_back(&ex.ctx);
    for (Eigen::Index k = 0; k < horizon; ++k) {
      for (Eigen::Index c = 0; c < 4; ++c) target(4 * k + c, static_cast<Eigen::Index>(b)) = ex.target(k, c);
    }
  }
  const Eigen::MatrixXd x = BuildInputs(inputs, ts, ctxs);
  Cache cache;
  RunForward(arch_, params_, x, cache);
  const Eigen::MatrixXd diff = cache.out - target;
  const double denom = static_cast<double>(out_dim * n);
  const double loss = diff.squaredNorm() / denom;
  if (grads == nullptr) return loss;

  Eigen::MatrixXd g = (2.0 / denom) * diff;
  if (arch_.renormalize_heading) {
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index k = 0; k < horizon; ++k) {
        const double hx = cache.y(4 * k + 2, b);
        const double hy = cache.y(4 * k + 3, b);
        const double nrm = std::hypot(hx, hy);
        double gx = 0.0;
        double gy = 0.0;
        if (nrm > kTinyNorm) {
          const double ux = hx / nrm;
          const double uy = hy / nrm;
          const double ox = g(4 * k + 2, b);
          const double oy = g(4 * k + 3, b);
          const double dot = ux * ox + uy * oy;
          gx = (ox - ux * dot) / nrm;
          gy = (oy - uy * dot) / nrm;
        }
        g(4 * k + 2, b) = gx;
        g(4 * k + 3, b) = gy;
      }
    }
  }

  const std::size_t L = arch_.layers;
  grads->assign(params_.size(), Eigen::MatrixXd());
  auto& gr = *grads;
  gr[2 + 2 * L] = g * cache.a_last.transpose();
  gr[3 + 2 * L] = g.rowwise().sum();
  Eigen::MatrixXd gh = (params_[2 + 2 * L].value.transpose() * g).cwiseProduct(SiluGrad(cache.h[L]));
  for (std::size_t l = L; l-- > 0;) {
    const auto& w = params_[2 + 2 * l].value;
    gr[2 + 2 * l] = gh * Silu(cache.h[l]).transpose();
    gr[3 + 2 * l] = gh.rowwise().sum();
    gh = gh + (w.transpose() * gh).cwiseProduct(SiluGrad(cache.h[l]));
  }
  gr[0] = gh * x.transpose();
  gr[1] = gh.rowwise().sum();
  return loss;
}

}  // namespace knowdiff
