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

#include "knowdiff/schedule.hpp"

#include <cmath>
#include <string>

#include "knowdiff/error.hpp"

namespace knowdiff {

void NoiseSchedule::Validate() const {
  if (!(beta_min > 0.0 && beta_min < beta_max && std::isfinite(beta_max))) {
    Fail(ErrorCode::kConfig, "schedule requires 0 < beta_min < beta_max");
  }
  if (!(eps_t > 0.0 && eps_t < 1.0)) Fail(ErrorCode::kConfig, "schedule requires 0 < eps_t < 1");
}

double NoiseSchedule::IntegratedBeta(double t) const {
  return beta_min * t + 0.5 * (beta_max - beta_min) * t * t;
}

double NoiseSchedule::AlphaBar(double t) const { return std::exp(-IntegratedBeta(t)); }

double NoiseSchedule::Sigma(double t) const {
  if (!(t > 0.0 && t <= 1.0)) Fail(ErrorCode::kDomain, "sigma: t must lie in (0, 1]");
  // -expm1 keeps precision as t -> 0.
  return std::sqrt(-std::expm1(-IntegratedBeta(t)));
}

PoseMatrix ForwardNoise(const NoiseSchedule& sched, const PoseMatrix& x0, double t,
                        const PoseMatrix& noise) {
  if (!(t >= sched.eps_t && t <= 1.0)) {
    Fail(ErrorCode::kDomain, "forward_noise: t must lie in [eps_t, 1]");
  }
  if (x0.rows() != noise.rows()) {
    Fail(ErrorCode::kShape, "forward_noise: x0 has " + std::to_string(x0.rows()) +
                                " rows, noise has " + std::to_string(noise.rows()));
  }
  return std::exp(-0.5 * sched.IntegratedBeta(t)) * x0 + sched.Sigma(t) * noise;
}

}  // namespace knowdiff
