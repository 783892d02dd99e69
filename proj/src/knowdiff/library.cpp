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

#include "knowdiff/library.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

constexpr char kLibraryMagic[] = "KDLB";

std::uint64_t ContentHash(const Trajectory& traj) {
  // FNV-1a over the raw doubles.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (const auto& p : traj.points) {
    mix(p.x);
    mix(p.y);
  }
  return h;
}

bool ContentLess(const Trajectory& a, const Trajectory& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.points[i];
    const auto& q = b.points[i];
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
  }
  return false;
}

void PutFeatures(BinaryWriter& w, const FeatureVector& f) {
  w.PutF64(f.mean_speed);
  w.PutF64(f.mean_accel);
  w.PutF64(f.heading_variation);
  w.PutF64(f.lateral_disp);
  w.PutF64(f.heading_change);
  w.PutF64(f.final_speed);
}

FeatureVector GetFeatures(BinaryReader& r) {
  FeatureVector f;
  f.mean_speed = r.GetF64();
  f.mean_accel = r.GetF64();
  f.heading_variation = r.GetF64();
  f.lateral_disp = r.GetF64();
  f.heading_change = r.GetF64();
  f.final_speed = r.GetF64();
  return f;
}

}  // namespace

const LibraryEntry* PriorLibrary::Find(const MetaAction& action) const {
  auto it = entries.find(action.index());
  return it == entries.end() ? nullptr : &it->second;
}

std::vector<Trajectory> SegmentLog(const DriveLog& log, double window_s) {
  if (!(window_s > 0.0)) Fail(ErrorCode::kInvalidArgument, "window_s must be > 0");
  if (!(log.dt > 0.0)) Fail(ErrorCode::kInvalidArgument, "log dt must be > 0");
  const double steps_real = window_s / log.dt;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (steps == 0 || std::abs(steps_real - static_cast<double>(steps)) > 1e-9) {
    Fail(ErrorCode::kInvalidArgument, "window must be a whole number of log steps");
  }
  std::vector<Trajectory> out;
  for (std::size_t anchor = 0; anchor + steps < log.frames.size(); anchor += steps) {
    out.push_back(LogEgoTrajectory(log, anchor + 1, steps, log.frames[anchor].ego));
  }
  return out;
}

PriorLibrary BuildLibrary(const std::vector<Trajectory>& segments) {
  PriorLibrary lib;
  if (segments.empty()) return lib;
  lib.horizon = segments.front().size();
  lib.dt = segments.front().dt;
  for (const auto& s : segments) {
    if (s.size() != lib.horizon || s.dt != lib.dt) {
      Fail(ErrorCode::kIncompatible, "segments must share horizon and dt");
    }
  }

  struct Member {
    std::uint64_t hash;
    const Trajectory* traj;
    FeatureVector features;
  };
  std::map<int, std::vector<Member>> groups;
  for (const auto& s : segments) {
    const FeatureVector f = ExtractFeatures(s);
    groups[Classify(f).index()].push_back({ContentHash(s), &s, f});
  }

  for (auto& [index, members] : groups) {
    std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) {
      if (a.hash != b.hash) return a.hash < b.hash;
      return ContentLess(*a.traj, *b.traj);
    });
    LibraryEntry entry;
    entry.action = MetaAction::FromIndex(index);
    entry.sample_count = members.size();
    entry.prior = Trajectory{std::vector<Waypoint>(lib.horizon), lib.dt};
    FeatureVector& fm = entry.feature_mean;
    for (const auto& m : members) {
      for (std::size_t k = 0; k < lib.horizon; ++k) {
        entry.prior.points[k].x += m.traj->points[k].x;
        entry.prior.points[k].y += m.traj->points[k].y;
      }
      fm.mean_speed += m.features.mean_speed;
      fm.mean_accel += m.features.mean_accel;
      fm.heading_variation += m.features.heading_variation;
      fm.lateral_disp += m.features.lateral_disp;
      fm.heading_change += m.features.heading_change;
      fm.final_speed += m.features.final_speed;
    }
    const double n = static_cast<double>(members.size());
    for (auto& p : entry.prior.points) {
      p.x /= n;
      p.y /= n;
    }
    fm.mean_speed /= n;
    fm.mean_accel /= n;
    fm.heading_variation /= n;
    fm.lateral_disp /= n;
    fm.heading_change /= n;
    fm.final_speed /= n;
    lib.entries.emplace(index, std::move(entry));
  }
  return lib;
}

std::vector<std::uint8_t> SerializeLibrary(const PriorLibrary& lib) {
  BinaryWriter w;
  w.PutU64(lib.horizon);
  w.PutF64(lib.dt);
  w.PutU64(lib.entries.size());
  for (const auto& [index, entry] : lib.entries) {
    w.PutU32(static_cast<std::uint32_t>(index));
    w.PutU64(entry.sample_count);
    for (const auto& p : entry.prior.points) {
      w.PutF64(p.x);
      w.PutF64(p.y);
    }
    PutFeatures(w, entry.feature_mean);
  }
  return SealContainer(kLibraryMagic, lib.version, w.bytes());
}

PriorLibrary DeserializeLibrary(std::span<const std::uint8_t> file) {
  const auto payload = OpenContainer(file, kLibraryMagic, kLibraryVersion);
  BinaryReader r(payload);
  PriorLibrary lib;
  lib.horizon = r.GetU64();
  lib.dt = r.GetF64();
  if (lib.horizon < 2 || lib.horizon > 4096 || !(lib.dt > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "library header has invalid horizon or dt");
  }
  const auto count = r.GetU64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto index = static_cast<int>(r.GetU32());
    if (index >= kNumMetaActions) Fail(ErrorCode::kInvalidArgument, "entry index out of range");
    LibraryEntry entry;
    entry.action = MetaAction::FromIndex(index);
    entry.sample_count = r.GetU64();
    entry.prior = Trajectory{std::vector<Waypoint>(lib.horizon), lib.dt};
    for (auto& p : entry.prior.points) {
      p.x = r.GetF64();
      p.y = r.GetF64();
    }
    entry.feature_mean = GetFeatures(r);
    if (!lib.entries.emplace(index, std::move(entry)).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate library entry " + std::to_string(index));
    }
  }
  r.ExpectEnd();
  return lib;
}

void SaveLibrary(const PriorLibrary& lib, const std::filesystem::path& path) {
  WriteFileBytes(path, SerializeLibrary(lib));
}

PriorLibrary LoadLibrary(const std::filesystem::path& path) {
  return DeserializeLibrary(ReadFileBytes(path));
}

}  // namespace knowdiff
