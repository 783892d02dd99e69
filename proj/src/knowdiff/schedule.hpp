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

// Variance-preserving noise schedule with a linear beta(t).

#ifndef KNOWDIFF_SCHEDULE_HPP_
#define KNOWDIFF_SCHEDULE_HPP_

#include <Eigen/Dense>

namespace knowdiff {

// Rows are frames, columns are (x, y, hx, hy).
using PoseMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4, Eigen::RowMajor>;

struct NoiseSchedule {
  double beta_min = 0.1;
  double beta_max = 20.0;
  double eps_t = 1e-3;

  void Validate() const;
  // Integral of beta over [0, t].
  double IntegratedBeta(double t) const;
  // exp(-B(t)), the signal power kept at t.
  double AlphaBar(double t) const;
  // Marginal standard deviation; kDomain outside (0, 1].
  double Sigma(double t) const;
};

// exp(-B(t)/2) * x0 + sigma(t) * noise. kDomain unless t in [eps_t, 1],
// kShape when the shapes differ.
PoseMatrix ForwardNoise(const NoiseSchedule& sched, const PoseMatrix& x0, double t,
                        const PoseMatrix& noise);

}  // namespace knowdiff

#endif  // KNOWDIFF_SCHEDULE_HPP_
