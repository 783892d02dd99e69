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

#include "knowdiff/metrics.hpp"

#include <cmath>
#include <string>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

void CheckPair(const Trajectory& pred, const Trajectory& gt) {
  if (pred.size() != gt.size() || pred.size() == 0) {
    Fail(ErrorCode::kShape, "trajectories must be non-empty and of equal length (" +
                                std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) + ")");
  }
  if (pred.dt != gt.dt) Fail(ErrorCode::kShape, "trajectories must share dt");
}

double PointDistance(const Waypoint& a, const Waypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

double Ade(const Trajectory& pred, const Trajectory& gt) {
  CheckPair(pred, gt);
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) sum += PointDistance(pred.points[k], gt.points[k]);
  return sum / static_cast<double>(pred.size());
}

double FdeAt(const Trajectory& pred, const Trajectory& gt, double horizon_s) {
  CheckPair(pred, gt);
  const double steps = horizon_s / pred.dt;
  const long k = std::lround(steps);
  if (std::abs(steps - static_cast<double>(k)) > 1e-9 || k < 1 ||
      static_cast<std::size_t>(k) > pred.size()) {
    Fail(ErrorCode::kInvalidArgument, "horizon " + std::to_string(horizon_s) +
                                          " s is not a step of this trajectory");
  }
  const auto i = static_cast<std::size_t>(k - 1);
  return PointDistance(pred.points[i], gt.points[i]);
}

double MissRate(const std::vector<Trajectory>& preds, const std::vector<Trajectory>& gts,
                const std::vector<MissThreshold>& thresholds) {
  if (preds.size() != gts.size()) Fail(ErrorCode::kShape, "prediction and ground-truth counts differ");
  if (preds.empty()) Fail(ErrorCode::kUndefinedMetric, "miss rate of an empty set");
  std::size_t misses = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (const auto& th : thresholds) {
      if (FdeAt(preds[i], gts[i], th.horizon_s) > th.max_error_m) {
        ++misses;
        break;
      }
    }
  }
  return static_cast<double>(misses) / static_cast<double>(preds.size());
}

}  // namespace knowdiff
