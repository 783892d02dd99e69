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

#include "knowdiff/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "knowdiff/error.hpp"
#include "knowdiff/scene.hpp"

namespace knowdiff {
namespace {

const LibraryEntry* NearestSpeed(const PriorLibrary& lib, Direction d, SpeedProfile s) {
  const LibraryEntry* best = nullptr;
  int best_dist = kNumSpeedProfiles + 1;
  for (int k = 0; k < kNumSpeedProfiles; ++k) {
    const LibraryEntry* e = lib.Find({d, static_cast<SpeedProfile>(k)});
    if (e == nullptr) continue;
    const int dist = std::abs(k - static_cast<int>(s));
    if (dist <= best_dist) {  // later label wins ties
      best = e;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

LookupResult Lookup(const PriorLibrary& lib, const MetaAction& action) {
  if (lib.empty()) Fail(ErrorCode::kLookup, "prior library is empty");
  if (const LibraryEntry* e = lib.Find(action)) return {e, false};
  if (const LibraryEntry* e = NearestSpeed(lib, action.direction, action.speed)) {
    return {e, true};
  }
  // Direction never observed: keep the lane and the requested speed.
  if (const LibraryEntry* e = NearestSpeed(lib, Direction::kGoStraight, action.speed)) {
    return {e, true};
  }
  return {&lib.entries.begin()->second, true};
}

double PriorInitialSpeed(const Trajectory& prior) {
  if (prior.size() == 0 || !(prior.dt > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "prior must be non-empty with dt > 0");
  }
  return std::hypot(prior.points[0].x, prior.points[0].y) / prior.dt;
}

Trajectory AlignPrior(const Trajectory& prior, const EgoState& ego, bool enabled) {
  const double v0 = PriorInitialSpeed(prior);
  if (!enabled || v0 < 1e-6) return prior;
  const double scale = std::clamp(ego.speed / v0, kAlignMinScale, kAlignMaxScale);
  if (scale == 1.0) return prior;

  std::vector<Waypoint> path;
  path.reserve(prior.size() + 1);
  path.push_back({0.0, 0.0});
  path.insert(path.end(), prior.points.begin(), prior.points.end());
  const Polyline line(path);
  std::vector<double> s(prior.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    acc += std::hypot(path[k + 1].x - path[k].x, path[k + 1].y - path[k].y);
    s[k] = acc;
  }
  Trajectory out{std::vector<Waypoint>(prior.size()), prior.dt};
  for (std::size_t k = 0; k < prior.size(); ++k) out.points[k] = line.PointAt(scale * s[k]);
  return out;
}

}  // namespace knowdiff
