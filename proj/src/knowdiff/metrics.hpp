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

// Displacement metrics. Point k of a trajectory sits at (k + 1) * dt.

#ifndef KNOWDIFF_METRICS_HPP_
#define KNOWDIFF_METRICS_HPP_

#include <vector>

#include "knowdiff/trajectory.hpp"

namespace knowdiff {

double Ade(const Trajectory& pred, const Trajectory& gt);
// Distance at time `horizon_s`; kInvalidArgument unless it is a whole
// number of steps within the horizon.
double FdeAt(const Trajectory& pred, const Trajectory& gt, double horizon_s);

struct MissThreshold {
  double horizon_s;
  double max_error_m;
};
inline const std::vector<MissThreshold> kDefaultMissThresholds = {{3.0, 2.0}, {5.0, 4.0}, {8.0, 8.0}};

// Fraction of samples exceeding any threshold (strictly). kUndefinedMetric
// for empty input.
double MissRate(const std::vector<Trajectory>& preds, const std::vector<Trajectory>& gts,
                const std::vector<MissThreshold>& thresholds = kDefaultMissThresholds);

}  // namespace knowdiff

#endif  // KNOWDIFF_METRICS_HPP_
