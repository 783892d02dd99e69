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

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/bridge.hpp"
#include "knowdiff/generator.hpp"
#include "knowdiff/library.hpp"
#include "test_util.hpp"

using namespace knowdiff;

namespace {

// Smooth random segment: speed profile plus a lateral drift and a curve.
Trajectory RandomSegment(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> v(0.5, 15.0);
  std::uniform_real_distribution<double> a(-1.5, 1.5);
  std::uniform_real_distribution<double> k(-0.04, 0.04);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  const double v0 = v(rng);
  const double acc = a(rng);
  const double curv = k(rng);
  const double drift = d(rng);
  Trajectory t;
  double x = 0.0, y = 0.0, h = 0.0, speed = v0;
  for (std::size_t i = 0; i < kHorizon; ++i) {
    speed = std::max(0.0, speed + acc * kStepSeconds);
    h += curv * speed * kStepSeconds;
    x += speed * std::cos(h) * kStepSeconds;
    y += speed * std::sin(h) * kStepSeconds;
    t.points.push_back({x, y + drift * static_cast<double>(i + 1) / kHorizon});
  }
  return t;
}

}  // namespace

TEST_CASE("priors equal the brute-force per-timestep mean of their members") {
  std::mt19937_64 rng(21);
  std::vector<Trajectory> segs;
  for (int i = 0; i < 300; ++i) segs.push_back(RandomSegment(rng));
  const PriorLibrary lib = BuildLibrary(segs);

  std::map<int, std::vector<const Trajectory*>> groups;
  for (const auto& s : segs) groups[Classify(ExtractFeatures(s)).index()].push_back(&s);
  CHECK(lib.size() == groups.size());
  std::uint64_t total = 0;
  for (const auto& [index, members] : groups) {
    const LibraryEntry* e = lib.Find(MetaAction::FromIndex(index));
    REQUIRE(e != nullptr);
    CHECK(e->sample_count == members.size());
    CHECK(e->action.index() == index);
    total += e->sample_count;
    for (std::size_t k = 0; k < kHorizon; ++k) {
      long double sx = 0.0L, sy = 0.0L;
      for (const auto* m : members) {
        sx += m->points[k].x;
        sy += m->points[k].y;
      }
      CHECK(std::abs(e->prior.points[k].x - static_cast<double>(sx / members.size())) < 1e-9);
      CHECK(std::abs(e->prior.points[k].y - static_cast<double>(sy / members.size())) < 1e-9);
    }
  }
  CHECK(total == segs.size());
}

TEST_CASE("library build is permutation invariant to the bit") {
  std::mt19937_64 rng(4);
  std::vector<Trajectory> segs;
  for (int i = 0; i < 200; ++i) segs.push_back(RandomSegment(rng));
  const auto a = SerializeLibrary(BuildLibrary(segs));
  std::shuffle(segs.begin(), segs.end(), rng);
  const auto b = SerializeLibrary(BuildLibrary(segs));
  CHECK(a == b);
}

TEST_CASE("every present label maps to exactly one entry with that label") {
  GeneratorConfig cfg;
  cfg.count = 60;
  cfg.seed = 8;
  std::vector<Trajectory> segs;
  for (const auto& log : GenerateScenarios(cfg)) {
    const auto s = SegmentLog(log, 8.0);
    segs.insert(segs.end(), s.begin(), s.end());
  }
  const PriorLibrary lib = BuildLibrary(segs);
  for (const auto& [index, entry] : lib.entries) {
    CHECK(entry.action.index() == index);
    const LookupResult hit = Lookup(lib, entry.action);
    CHECK(hit.entry == &entry);
    CHECK_FALSE(hit.substituted);
  }
}

TEST_CASE("segmenting a 10 s log at 8 s windows") {
  const DriveLog log = kdtest::StraightLog(10.0);
  const auto segs = SegmentLog(log, 8.0);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].size() == kHorizon);
  CHECK(segs[0].points[0].x == doctest::Approx(5.0));
  CHECK(segs[0].points[15].x == doctest::Approx(80.0));
  CHECK(SegmentLog(kdtest::StraightLog(10.0, 10), 8.0).empty());
  CHECK(SegmentLog(kdtest::StraightLog(10.0, 41), 8.0).size() == 2);
  kdtest::ExpectCode([&] { SegmentLog(log, 0.3); }, ErrorCode::kInvalidArgument);
}

TEST_CASE("mixed horizons are rejected") {
  std::mt19937_64 rng(1);
  std::vector<Trajectory> segs{RandomSegment(rng), RandomSegment(rng)};
  segs[1].points.pop_back();
  kdtest::ExpectCode([&] { BuildLibrary(segs); }, ErrorCode::kIncompatible);
  CHECK(BuildLibrary({}).empty());
}

TEST_CASE("library file round trip and corruption") {
  std::mt19937_64 rng(2);
  std::vector<Trajectory> segs;
  for (int i = 0; i < 50; ++i) segs.push_back(RandomSegment(rng));
  const PriorLibrary lib = BuildLibrary(segs);
  kdtest::TempDir dir;
  SaveLibrary(lib, dir / "lib.kdlb");
  const PriorLibrary back = LoadLibrary(dir / "lib.kdlb");
  CHECK(SerializeLibrary(back) == SerializeLibrary(lib));

  auto bytes = SerializeLibrary(lib);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x40;
  kdtest::ExpectCode([&] { DeserializeLibrary(flipped); }, ErrorCode::kChecksum);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  kdtest::ExpectCode([&] { DeserializeLibrary(truncated); }, ErrorCode::kTruncated);
  auto magic = bytes;
  magic[0] = 'X';
  kdtest::ExpectCode([&] { DeserializeLibrary(magic); }, ErrorCode::kBadMagic);
  auto version = bytes;
  version[4] = 9;
  kdtest::ExpectCode([&] { DeserializeLibrary(version); }, ErrorCode::kVersionMismatch);
  kdtest::ExpectCode([&] { LoadLibrary(dir / "missing.kdlb"); }, ErrorCode::kIo);
}

TEST_CASE("crc32 matches the reference check value") {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> v(s.begin(), s.end());
  CHECK(Crc32(v) == 0xCBF43926u);
}

TEST_CASE("binary reader detects short reads and trailing bytes") {
  BinaryWriter w;
  w.PutU32(7);
  w.PutString("abc");
  w.PutF64Array(std::vector<double>{1.5, -2.0});
  BinaryReader r(w.bytes());
  CHECK(r.GetU32() == 7);
  CHECK(r.GetString() == "abc");
  CHECK(r.GetF64Array() == std::vector<double>{1.5, -2.0});
  CHECK(r.AtEnd());
  BinaryReader short_read(std::span<const std::uint8_t>(w.bytes().data(), 2));
  kdtest::ExpectCode([&] { short_read.GetU32(); }, ErrorCode::kTruncated);
  BinaryReader extra(w.bytes());
  extra.GetU32();
  kdtest::ExpectCode([&] { extra.ExpectEnd(); }, ErrorCode::kTruncated);
}
