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

// knowdiff command-line front end. Talks to the pipeline only through the C
// interface.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "knowdiff/knowdiff.h"

namespace {

constexpr int kExitUsage = 1;

int ExitCode(kd_status s) {
  switch (s) {
    case KD_OK: return 0;
    case KD_IO:
    case KD_FORMAT: return 2;
    case KD_EMPTY_DATA: return 3;
    case KD_NUMERIC: return 4;
    case KD_CONFIG: return 5;
    case KD_INCOMPATIBLE: return 6;
    default: return kExitUsage;
  }
}

// Thrown to unwind to main with an exit code.
struct Exit {
  int code;
};

void Check(kd_status s, const char* what) {
  if (s == KD_OK) return;
  std::fprintf(stderr, "error: %s: %s (%s)\n", what, kd_last_error(), kd_status_name(s));
  throw Exit{ExitCode(s)};
}

[[noreturn]] void Usage(const std::string& msg) {
  std::fprintf(stderr, "usage error: %s\n", msg.c_str());
  throw Exit{kExitUsage};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Config = Handle<kd_config, kd_config_free>;
using Logs = Handle<kd_logset, kd_logset_free>;
using Library = Handle<kd_library, kd_library_free>;
using Model = Handle<kd_model, kd_model_free>;
using PlannerH = Handle<kd_planner, kd_planner_free>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { kd_string_free(s); }
  std::string str() const { return s == nullptr ? std::string() : std::string(s); }
};

void WriteText(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    throw Exit{2};
  }
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
  if (!out) {
    std::fprintf(stderr, "error: failed writing %s\n", path.c_str());
    throw Exit{2};
  }
}

void LoadConfig(Config& cfg, const std::string& path) {
  if (path.empty()) {
    Check(kd_config_default(&cfg.p), "default config");
  } else {
    Check(kd_config_load(path.c_str(), &cfg.p), "load config");
  }
}

void Merge(Config& cfg, const std::string& patch) { Check(kd_config_merge(cfg.p, patch.c_str()), "config override"); }

std::string Dump(const Config& cfg) {
  OwnedString s;
  Check(kd_config_dump(cfg.p, &s.s), "config dump");
  return s.str();
}

// Minimal extraction of numeric fields for console summaries.
std::string Field(const std::string& json, const std::string& key) {
  const auto pos = json.find("\"" + key + "\":");
  if (pos == std::string::npos) return "?";
  auto start = pos + key.size() + 3;
  while (start < json.size() && json[start] == ' ') ++start;
  auto end = json.find_first_of(",\n}", start);
  return json.substr(start, end - start);
}

struct Common {
  std::string config;
  std::string log_level = "warn";
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "pipeline config (JSON)");
  cmd->add_option("--log-level", c.log_level, "off|error|warn|info|debug");
}

void ApplyLogLevel(const Common& c) { Check(kd_set_log_level(c.log_level.c_str()), "log level"); }

struct PlannerArgs {
  std::string planner = "knowdiffuser";
  std::string library;
  std::string ckpt;
  std::string provider = "heuristic";
  double t1 = -1.0;
  double t2 = -1.0;
};

void AddPlannerArgs(CLI::App* cmd, PlannerArgs& a, bool with_kind) {
  if (with_kind) {
    cmd->add_option("--planner", a.planner, "expert|straight|prior|knowdiffuser|knowdiffuser-full");
  }
  cmd->add_option("--library", a.library, "prior library file");
  cmd->add_option("--ckpt", a.ckpt, "denoiser checkpoint");
  cmd->add_option("--provider", a.provider, "heuristic|remote")
      ->check(CLI::IsMember({"heuristic", "remote"}));
  cmd->add_option("--t1", a.t1, "first noise level");
  cmd->add_option("--t2", a.t2, "second noise level");
}

void ApplyInferOverrides(Config& cfg, const PlannerArgs& a) {
  std::ostringstream patch;
  patch.precision(17);
  patch << "{\"infer\":{";
  bool first = true;
  if (a.t1 >= 0.0) {
    patch << "\"t1\":" << a.t1;
    first = false;
  }
  if (a.t2 >= 0.0) patch << (first ? "" : ",") << "\"t2\":" << a.t2;
  patch << "}}";
  if (a.t1 >= 0.0 && a.t2 >= 0.0 && !(a.t1 < a.t2)) Usage("--t1 must be smaller than --t2");
  if (a.t1 >= 0.0 || a.t2 >= 0.0) {
    const kd_status s = kd_config_merge(cfg.p, patch.str().c_str());
    if (s != KD_OK) Usage(std::string("invalid noise levels: ") + kd_last_error());
  }
}

void MakePlanner(PlannerH& planner, const PlannerArgs& a, const Config& cfg, Library& lib, Model& model) {
  const bool needs_lib = a.planner == "prior" || a.planner.rfind("knowdiffuser", 0) == 0;
  const bool needs_model = a.planner.rfind("knowdiffuser", 0) == 0;
  if (needs_lib) {
    if (a.library.empty()) Usage("--library is required for planner " + a.planner);
    Check(kd_library_load(a.library.c_str(), &lib.p), "load library");
  }
  if (needs_model) {
    if (a.ckpt.empty()) Usage("--ckpt is required for planner " + a.planner);
    Check(kd_model_load(a.ckpt.c_str(), &model.p), "load checkpoint");
  }
  Check(kd_planner_create(a.planner.c_str(), lib.p, model.p, cfg.p, a.provider.c_str(), &planner.p),
        "create planner");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowdiff: knowledge-anchored diffusion trajectory planning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kd_version());

  // gen-data
  Common gen_c;
  long long gen_count = -1;
  unsigned long long gen_seed = 0;
  bool gen_seed_set = false;
  std::string gen_out;
  std::vector<std::string> gen_kinds;
  auto* gen = app.add_subcommand("gen-data", "generate synthetic drive logs");
  AddCommon(gen, gen_c);
  gen->add_option("--count", gen_count, "number of logs")->required();
  gen->add_option_function<unsigned long long>("--seed", [&](unsigned long long s) {
    gen_seed = s;
    gen_seed_set = true;
  }, "generator seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--kinds", gen_kinds, "scenario kinds")->delimiter(',');

  // build-library
  Common lib_c;
  std::string lib_logs, lib_out;
  double lib_window = -1.0;
  auto* blib = app.add_subcommand("build-library", "build the meta-action prior library");
  AddCommon(blib, lib_c);
  blib->add_option("--logs", lib_logs, "log directory")->required();
  blib->add_option("--out", lib_out, "library file")->required();
  blib->add_option("--window-s", lib_window, "segment window in seconds");

  // train
  Common tr_c;
  std::string tr_logs, tr_lib, tr_out, tr_resume, tr_curve;
  long long tr_steps = -1;
  auto* train = app.add_subcommand("train", "train the denoiser");
  AddCommon(train, tr_c);
  train->add_option("--logs", tr_logs, "log directory")->required();
  train->add_option("--library", tr_lib, "library file")->required();
  train->add_option("--out", tr_out, "checkpoint to write")->required();
  train->add_option("--resume", tr_resume, "checkpoint to continue from");
  train->add_option("--loss-curve", tr_curve, "loss curve CSV (default: <out>.loss.csv)");
  train->add_option("--steps", tr_steps, "total step count (overrides config)");

  // plan
  Common pl_c;
  PlannerArgs pl_a;
  std::string pl_scenario, pl_out;
  std::size_t pl_frame = 4;
  auto* plan = app.add_subcommand("plan", "plan one scene");
  AddCommon(plan, pl_c);
  AddPlannerArgs(plan, pl_a, true);
  plan->add_option("--scenario", pl_scenario, "drive log file")->required();
  plan->add_option("--frame", pl_frame, "frame to plan from");
  plan->add_option("--out", pl_out, "output JSON (default: stdout)");

  // simulate
  Common sim_c;
  PlannerArgs sim_a;
  std::string sim_scenario, sim_out, sim_trace;
  bool sim_reactive = false;
  auto* sim = app.add_subcommand("simulate", "closed-loop rollout of one scene");
  AddCommon(sim, sim_c);
  AddPlannerArgs(sim, sim_a, true);
  sim->add_option("--scenario", sim_scenario, "drive log file")->required();
  sim->add_flag("--reactive", sim_reactive, "car-following agents");
  sim->add_option("--trace-dir", sim_trace, "directory for the trace CSV");
  sim->add_option("--out", sim_out, "report JSON (default: stdout)");

  // evaluate
  Common ev_c;
  PlannerArgs ev_a;
  std::string ev_mode, ev_dir, ev_out, ev_trace;
  bool ev_reactive = false;
  auto* ev = app.add_subcommand("evaluate", "open- or closed-loop evaluation over a log set");
  AddCommon(ev, ev_c);
  AddPlannerArgs(ev, ev_a, true);
  ev->add_option("--mode", ev_mode, "open|closed")->required()->check(CLI::IsMember({"open", "closed"}));
  ev->add_option("--scenarios", ev_dir, "log directory")->required();
  ev->add_option("--out", ev_out, "report JSON")->required();
  ev->add_flag("--reactive", ev_reactive, "car-following agents (closed loop)");
  ev->add_option("--trace-dir", ev_trace, "trace CSV directory (closed loop)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      ApplyLogLevel(gen_c);
      if (gen_count < 1) Usage("--count must be >= 1");
      Config cfg;
      LoadConfig(cfg, gen_c.config);
      std::ostringstream patch;
      patch << "{\"generator\":{\"count\":" << gen_count;
      if (gen_seed_set) patch << ",\"seed\":" << gen_seed;
      if (!gen_kinds.empty()) {
        patch << ",\"kinds\":[";
        for (std::size_t i = 0; i < gen_kinds.size(); ++i) patch << (i ? "," : "") << '"' << gen_kinds[i] << '"';
        patch << "]";
      }
      patch << "}}";
      Merge(cfg, patch.str());
      Logs logs;
      Check(kd_logset_generate(cfg.p, &logs.p), "generate");
      Check(kd_logset_save_dir(logs.p, gen_out.c_str()), "write logs");
      OwnedString cov;
      Check(kd_logset_coverage(logs.p, &cov.s), "coverage");
      std::printf("wrote %zu logs to %s\ncoverage: %s\n", kd_logset_size(logs.p), gen_out.c_str(), cov.s);
    } else if (blib->parsed()) {
      ApplyLogLevel(lib_c);
      Config cfg;
      LoadConfig(cfg, lib_c.config);
      if (lib_window > 0.0) {
        std::ostringstream patch;
        patch.precision(17);
        patch << "{\"library\":{\"window_s\":" << lib_window << "}}";
        Merge(cfg, patch.str());
      } else if (lib_window != -1.0) {
        Usage("--window-s must be > 0");
      }
      const std::string window = Field(Dump(cfg), "window_s");
      Logs logs;
      Check(kd_logset_load_dir(lib_logs.c_str(), &logs.p), "load logs");
      Library lib;
      Check(kd_library_build(logs.p, std::stod(window), &lib.p), "build library");
      Check(kd_library_save(lib.p, lib_out.c_str()), "write library");
      OwnedString sum;
      Check(kd_library_summary(lib.p, &sum.s), "summary");
      std::printf("%s\n", sum.s);
    } else if (train->parsed()) {
      ApplyLogLevel(tr_c);
      Config cfg;
      LoadConfig(cfg, tr_c.config);
      if (tr_steps >= 1) Merge(cfg, "{\"train\":{\"steps\":" + std::to_string(tr_steps) + "}}");
      else if (tr_steps != -1) Usage("--steps must be >= 1");
      std::printf("effective config:\n%s\n", Dump(cfg).c_str());
      Logs logs;
      Check(kd_logset_load_dir(tr_logs.c_str(), &logs.p), "load logs");
      Library lib;
      Check(kd_library_load(tr_lib.c_str(), &lib.p), "load library");
      Model model;
      if (tr_resume.empty()) {
        Check(kd_model_create(cfg.p, &model.p), "create model");
      } else {
        Check(kd_model_load(tr_resume.c_str(), &model.p), "load checkpoint");
      }
      auto progress = [](size_t step, double loss, void*) {
        if (step % 100 == 0) std::fprintf(stderr, "step %zu loss %.6f\n", step, loss);
      };
      Check(kd_model_train(model.p, logs.p, lib.p, cfg.p, progress, nullptr), "train");
      Check(kd_model_save(model.p, tr_out.c_str()), "write checkpoint");
      const double* losses = nullptr;
      size_t n = 0;
      Check(kd_model_losses(model.p, &losses, &n), "loss curve");
      std::ostringstream curve;
      curve.precision(17);
      curve << "step,loss\n";
      for (size_t i = 0; i < n; ++i) curve << i << ',' << losses[i] << '\n';
      WriteText(tr_curve.empty() ? tr_out + ".loss.csv" : tr_curve, curve.str());
      std::printf("trained %zu steps, %zu parameters, final loss %.6f\n", n,
                  kd_model_parameter_count(model.p), n ? losses[n - 1] : 0.0);
    } else if (plan->parsed() || sim->parsed() || ev->parsed()) {
      const Common& c = plan->parsed() ? pl_c : sim->parsed() ? sim_c : ev_c;
      const PlannerArgs& a = plan->parsed() ? pl_a : sim->parsed() ? sim_a : ev_a;
      ApplyLogLevel(c);
      Config cfg;
      LoadConfig(cfg, c.config);
      ApplyInferOverrides(cfg, a);
      Library lib;
      Model model;
      PlannerH planner;
      MakePlanner(planner, a, cfg, lib, model);
      Logs logs;
      OwnedString out;
      std::string out_path;
      if (plan->parsed()) {
        Check(kd_logset_load_file(pl_scenario.c_str(), &logs.p), "load scenario");
        Check(kd_planner_plan(planner.p, logs.p, 0, pl_frame, &out.s), "plan");
        out_path = pl_out;
      } else if (sim->parsed()) {
        Check(kd_logset_load_file(sim_scenario.c_str(), &logs.p), "load scenario");
        Check(kd_evaluate_closed_loop(planner.p, logs.p, cfg.p, sim_reactive ? 1 : 0,
                                      sim_trace.empty() ? nullptr : sim_trace.c_str(), &out.s),
              "simulate");
        out_path = sim_out;
        std::fprintf(stderr, "score %s collisions %s\n", Field(out.str(), "mean_score").c_str(),
                     Field(out.str(), "collisions").c_str());
      } else {
        Check(kd_logset_load_dir(ev_dir.c_str(), &logs.p), "load scenarios");
        if (ev_mode == "open") {
          Check(kd_evaluate_open_loop(planner.p, logs.p, &out.s), "evaluate");
          const std::string r = out.str();
          std::printf("%-20s %8s %8s %8s %8s %6s %7s\n", "planner", "ADE8s", "FDE3s", "FDE5s",
                      "FDE8s", "MR", "samples");
          std::printf("%-20s %8.3f %8.3f %8.3f %8.3f %6.3f %7s\n", a.planner.c_str(),
                      std::stod(Field(r, "ade_8s")), std::stod(Field(r, "fde_3s")),
                      std::stod(Field(r, "fde_5s")), std::stod(Field(r, "fde_8s")),
                      std::stod(Field(r, "miss_rate")), Field(r, "sample_count").c_str());
        } else {
          Check(kd_evaluate_closed_loop(planner.p, logs.p, cfg.p, ev_reactive ? 1 : -1,
                                        ev_trace.empty() ? nullptr : ev_trace.c_str(), &out.s),
                "evaluate");
          const std::string r = out.str();
          std::printf("%-20s %8s %6s %10s %9s %8s\n", "planner", "score", "coll", "drivable",
                      "progress", "reactive");
          std::printf("%-20s %8.2f %6s %10s %9.3f %8s\n", a.planner.c_str(),
                      std::stod(Field(r, "mean_score")), Field(r, "collisions").c_str(),
                      Field(r, "drivable_violations").c_str(), std::stod(Field(r, "mean_progress")),
                      Field(r, "reactive").c_str());
        }
        out_path = ev_out;
      }
      if (out_path.empty()) {
        std::printf("%s\n", out.s);
      } else {
        WriteText(out_path, out.str());
      }
    }
  } catch (const Exit& e) {
    return e.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
