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
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "knowdiff/binary_io.hpp"
#include "knowdiff/scene.hpp"
#include "test_util.hpp"

#ifndef KD_CLI_PATH
#error "KD_CLI_PATH must point at the command-line binary"
#endif

using namespace knowdiff;

namespace {

int Run(const std::string& args) {
  const std::string cmd = "env -u KNOWDIFF_API_KEY " + std::string(KD_CLI_PATH) + " " + args +
                          " --log-level off > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string Q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

struct Workspace {
  kdtest::TempDir dir;
  std::filesystem::path logs = dir / "logs";
  std::filesystem::path lib = dir / "lib.kdlb";
  std::filesystem::path ckpt = dir / "model.kdck";
  std::filesystem::path cfg = dir / "cfg.json";

  Workspace() {
    WriteTextFile(cfg, R"({"model": {"width": 16, "layers": 1}, "train": {"batch_size": 4}})");
    REQUIRE(Run("gen-data --count 12 --seed 3 --out " + Q(logs)) == 0);
    REQUIRE(Run("build-library --logs " + Q(logs) + " --out " + Q(lib)) == 0);
    REQUIRE(Run("train --logs " + Q(logs) + " --library " + Q(lib) + " --config " + Q(cfg) +
                " --steps 2 --out " + Q(ckpt)) == 0);
  }
  std::string PlanArgs() const {
    return "plan --scenario " + Q(logs / "log_00000.kdlog") + " --library " + Q(lib) + " --ckpt " +
           Q(ckpt);
  }
};

}  // namespace

TEST_CASE("pipeline commands succeed end to end") {
  Workspace w;
  CHECK(std::filesystem::exists(w.dir / "model.kdck.loss.csv"));
  CHECK(Run(w.PlanArgs() + " --out " + Q(w.dir / "plan.json")) == 0);
  const auto plan = nlohmann::json::parse(ReadTextFile(w.dir / "plan.json"));
  CHECK(plan["trajectory"]["points"].size() == 16);
  CHECK(Run("evaluate --mode open --planner expert --scenarios " + Q(w.logs) + " --out " +
            Q(w.dir / "ol.json")) == 0);
  const auto ol = nlohmann::json::parse(ReadTextFile(w.dir / "ol.json"));
  CHECK(ol["kind"] == "open_loop");
  CHECK(ol["ade_8s"].get<double>() < 1e-9);
  CHECK(Run("simulate --planner expert --scenario " + Q(w.logs / "log_00001.kdlog") +
            " --trace-dir " + Q(w.dir / "traces") + " --out " + Q(w.dir / "sim.json")) == 0);
  CHECK(std::filesystem::exists(w.dir / "traces"));
}

TEST_CASE("usage errors exit 1") {
  Workspace w;
  CHECK(Run("gen-data --count 0 --out " + Q(w.dir / "x")) == 1);
  CHECK(Run("frobnicate") == 1);
  CHECK(Run(w.PlanArgs() + " --t1 0.2 --t2 0.1") == 1);
  CHECK(Run(w.PlanArgs() + " --planner teleport") == 1);
}

TEST_CASE("I/O and format failures exit 2") {
  Workspace w;
  WriteTextFile(w.dir / "plain", "x");
  CHECK(Run("gen-data --count 2 --out " + Q(w.dir / "plain" / "sub")) == 2);
  CHECK(Run("build-library --logs " + Q(w.dir / "missing") + " --out " + Q(w.dir / "l")) == 2);
  auto bytes = ReadFileBytes(w.lib);
  bytes[bytes.size() / 2] ^= 0xff;
  WriteFileBytes(w.dir / "bad.kdlb", bytes);
  CHECK(Run("plan --scenario " + Q(w.logs / "log_00000.kdlog") + " --library " +
            Q(w.dir / "bad.kdlb") + " --ckpt " + Q(w.ckpt)) == 2);
}

TEST_CASE("empty data exits 3") {
  kdtest::TempDir dir;
  std::filesystem::create_directories(dir / "short");
  SaveDriveLog(kdtest::StraightLog(5.0, 11), dir / "short" / "a.kdlog");
  CHECK(Run("build-library --logs " + Q(dir / "short") + " --out " + Q(dir / "l.kdlb")) == 3);
  std::filesystem::create_directories(dir / "none");
  CHECK(Run("build-library --logs " + Q(dir / "none") + " --out " + Q(dir / "l.kdlb")) == 3);
}

TEST_CASE("remote provider without a key exits 5 before any request") {
  Workspace w;
  CHECK(Run(w.PlanArgs() + " --provider remote") == 5);
  WriteTextFile(w.dir / "broken.json", R"({"train": {"steps": "lots"}})");
  CHECK(Run("train --logs " + Q(w.logs) + " --library " + Q(w.lib) + " --config " +
            Q(w.dir / "broken.json") + " --out " + Q(w.dir / "m2.kdck")) == 5);
}

TEST_CASE("mixed step sizes exit 6") {
  kdtest::TempDir dir;
  std::filesystem::create_directories(dir / "mixed");
  SaveDriveLog(kdtest::StraightLog(5.0), dir / "mixed" / "a.kdlog");
  SaveDriveLog(kdtest::StraightLog(5.0, 41, 0.25), dir / "mixed" / "b.kdlog");
  CHECK(Run("evaluate --mode open --planner expert --scenarios " + Q(dir / "mixed") + " --out " +
            Q(dir / "r.json")) == 6);
}
