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

// Meta-action -> prior trajectory retrieval and ego alignment.

#ifndef KNOWDIFF_BRIDGE_HPP_
#define KNOWDIFF_BRIDGE_HPP_

#include "knowdiff/library.hpp"

namespace knowdiff {

struct LookupResult {
  const LibraryEntry* entry = nullptr;
  bool substituted = false;  // entry belongs to a neighbouring speed label
};

// Exact entry when present, otherwise the same direction with the nearest
// speed in axis order (ties go to the later label), then GoStraight by the
// same rule, then the first entry. kLookup only for an empty library.
LookupResult Lookup(const PriorLibrary& lib, const MetaAction& action);

inline constexpr double kAlignMinScale = 0.5;
inline constexpr double kAlignMaxScale = 2.0;

// Speed implied by the first waypoint, |p0| / dt.
double PriorInitialSpeed(const Trajectory& prior);

// Rescales the arc-length profile of `prior` by ego.speed / initial speed,
// clamped to [0.5, 2.0]. Identity when `enabled` is false or the prior is
// stationary.
Trajectory AlignPrior(const Trajectory& prior, const EgoState& ego, bool enabled = true);

}  // namespace knowdiff

#endif  // KNOWDIFF_BRIDGE_HPP_
