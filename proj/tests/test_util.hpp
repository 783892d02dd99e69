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

#ifndef KNOWDIFF_TESTS_TEST_UTIL_HPP_
#define KNOWDIFF_TESTS_TEST_UTIL_HPP_

#include <doctest.h>
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "knowdiff/error.hpp"
#include "knowdiff/scene.hpp"

namespace kdtest {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("kdtest_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Runs `f` and checks it fails with `code`.
template <typename F>
void ExpectCode(F&& f, knowdiff::ErrorCode code) {
  try {
    f();
    FAIL("expected an error: " << knowdiff::ErrorCodeName(code));
  } catch (const knowdiff::Error& e) {
    CHECK_MESSAGE(e.code() == code, "got " << knowdiff::ErrorCodeName(e.code()) << ": " << e.what());
  }
}

// Straight road along +x: route lane 0 and an opposite lane 1 at y = 3.5.
// The ego drives at constant `speed` from the origin.
inline knowdiff::DriveLog StraightLog(double speed, std::size_t frames = 21, double dt = 0.5) {
  knowdiff::DriveLog log;
  log.dt = dt;
  log.kind = "straight";
  log.seed = 99;
  knowdiff::Lane route{0, {{-50.0, 0.0}, {400.0, 0.0}}, {}, true};
  knowdiff::Lane opposite{1, {{400.0, 3.5}, {-50.0, 3.5}}, {}, false};
  log.lanes = {route, opposite};
  for (std::size_t k = 0; k < frames; ++k) {
    knowdiff::LogFrame f;
    f.ego = {speed * dt * static_cast<double>(k), 0.0, 0.0, speed};
    log.frames.push_back(f);
  }
  return log;
}

// Straight road with a vehicle parked in the ego lane `gap` meters ahead.
inline knowdiff::DriveLog StoppedLeadLog(double speed = 10.0, double gap = 40.0) {
  knowdiff::DriveLog log = StraightLog(speed);
  log.kind = "stopped_lead";
  // The recorded ego stops behind the vehicle.
  double x = 0.0;
  double v = speed;
  const double stop_at = gap - 8.0;
  const double decel = speed * speed / (2.0 * stop_at);
  for (auto& f : log.frames) {
    f.ego = {x, 0.0, 0.0, v};
    f.agents.push_back({7, knowdiff::AgentKind::kVehicle, gap, 0.0, 0.0, 0.0, 0});
    const double v_next = std::max(0.0, v - decel * log.dt);
    x += 0.5 * (v + v_next) * log.dt;
    v = v_next;
  }
  return log;
}

}  // namespace kdtest

#endif  // KNOWDIFF_TESTS_TEST_UTIL_HPP_
