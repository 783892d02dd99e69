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

// Offline construction of the meta-action -> prior trajectory library.

#ifndef KNOWDIFF_LIBRARY_HPP_
#define KNOWDIFF_LIBRARY_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "knowdiff/meta_action.hpp"
#include "knowdiff/scene.hpp"
#include "knowdiff/trajectory.hpp"

namespace knowdiff {

inline constexpr std::uint32_t kLibraryVersion = 1;

struct LibraryEntry {
  MetaAction action;
  Trajectory prior;  // canonical ego frame
  std::uint64_t sample_count = 0;
  FeatureVector feature_mean;
};

// At most one entry per meta-action; every prior has the same horizon and dt.
struct PriorLibrary {
  std::map<int, LibraryEntry> entries;  // keyed by MetaAction::index()
  std::size_t horizon = kHorizon;
  double dt = kStepSeconds;
  std::uint32_t version = kLibraryVersion;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
  const LibraryEntry* Find(const MetaAction& action) const;
};

// Non-overlapping windows of `window_s` seconds. Each window is expressed in
// the ego frame of the frame preceding its first point, so a window of N
// points covers (t0, t0 + N*dt]. Logs shorter than one window yield nothing.
std::vector<Trajectory> SegmentLog(const DriveLog& log, double window_s);

// Groups segments by their classified meta-action and averages each group
// per timestep. Member order is canonicalized by content before summation so
// that any permutation of `segments` produces bit-identical priors.
PriorLibrary BuildLibrary(const std::vector<Trajectory>& segments);

void SaveLibrary(const PriorLibrary& lib, const std::filesystem::path& path);
PriorLibrary LoadLibrary(const std::filesystem::path& path);
std::vector<std::uint8_t> SerializeLibrary(const PriorLibrary& lib);
PriorLibrary DeserializeLibrary(std::span<const std::uint8_t> file);

}  // namespace knowdiff

#endif  // KNOWDIFF_LIBRARY_HPP_
