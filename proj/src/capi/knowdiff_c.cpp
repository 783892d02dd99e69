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

#include "knowdiff/knowdiff.h"

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fmt/format.h>
#include <memory>
#include <string>
#include <vector>

#include "knowdiff/config.hpp"
#include "knowdiff/error.hpp"
#include "knowdiff/evaluate.hpp"
#include "knowdiff/generator.hpp"
#include "knowdiff/library.hpp"
#include "knowdiff/remote.hpp"

using nlohmann::json;

struct kd_config {
  knowdiff::PipelineConfig cfg;
};
struct kd_logset {
  std::vector<knowdiff::DriveLog> logs;
};
struct kd_library {
  knowdiff::PriorLibrary lib;
};
struct kd_model {
  knowdiff::Checkpoint ckpt;
};
struct kd_planner {
  std::unique_ptr<knowdiff::Planner> impl;
};

namespace {

thread_local std::string g_last_error;

kd_status FromCode(knowdiff::ErrorCode code) {
  using knowdiff::ErrorCode;
  switch (code) {
    case ErrorCode::kIo:
      return KD_IO;
    case ErrorCode::kEmptyData:
    case ErrorCode::kLookup:
      return KD_EMPTY_DATA;
    case ErrorCode::kNumeric:
      return KD_NUMERIC;
    case ErrorCode::kConfig:
      return KD_CONFIG;
    case ErrorCode::kIncompatible:
      return KD_INCOMPATIBLE;
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kTruncated:
    case ErrorCode::kChecksum:
    case ErrorCode::kBadMagic:
      return KD_FORMAT;
    case ErrorCode::kInternal:
      return KD_INTERNAL;
    default:
      return KD_INVALID_ARGUMENT;
  }
}

// Runs `f`, translating every exception into a status and message.
template <typename F>
kd_status Call(F&& f) {
  try {
    f();
    g_last_error.clear();
    return KD_OK;
  } catch (const knowdiff::Error& e) {
    g_last_error = e.what();
    return FromCode(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return KD_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KD_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return KD_INTERNAL;
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void Emit(const json& j, char** out) {
  Require(out, "output pointer");
  *out = Dup(j.dump(2));
}

json TrajectoryJson(const knowdiff::Trajectory& t) {
  json pts = json::array();
  for (const auto& p : t.points) pts.push_back({p.x, p.y});
  return {{"dt", t.dt}, {"points", pts}};
}

std::shared_ptr<knowdiff::DecisionProvider> MakeProvider(const char* name,
                                                         const knowdiff::PipelineConfig& cfg) {
  const std::string p = name == nullptr ? "heuristic" : name;
  if (p == "heuristic") return std::make_shared<knowdiff::HeuristicProvider>();
  if (p == "remote") return std::make_shared<knowdiff::RemoteProvider>(cfg.remote);
  knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, "unknown provider " + p);
}

}  // namespace

extern "C" {

const char* kd_version(void) { return "1.0.0"; }

const char* kd_last_error(void) { return g_last_error.c_str(); }

const char* kd_status_name(kd_status status) {
  switch (status) {
    case KD_OK: return "ok";
    case KD_INVALID_ARGUMENT: return "invalid_argument";
    case KD_IO: return "io";
    case KD_EMPTY_DATA: return "empty_data";
    case KD_NUMERIC: return "numeric";
    case KD_CONFIG: return "config";
    case KD_INCOMPATIBLE: return "incompatible";
    case KD_FORMAT: return "format";
    case KD_INTERNAL: return "internal";
  }
  return "unknown";
}

void kd_string_free(char* s) { std::free(s); }

uint64_t kd_network_request_count(void) { return knowdiff::NetworkRequestCount(); }

kd_status kd_set_log_level(const char* level) {
  return Call([&] {
    Require(level, "level");
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::string(level) != "off") {
      knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, std::string("unknown log level ") + level);
    }
    spdlog::set_level(lvl);
  });
}

kd_status kd_config_default(kd_config** out) {
  return Call([&] {
    Require(out, "out");
    *out = new kd_config{};
  });
}

kd_status kd_config_load(const char* path, kd_config** out) {
  return Call([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new kd_config{knowdiff::LoadConfig(path)};
  });
}

kd_status kd_config_merge(kd_config* cfg, const char* json_patch) {
  return Call([&] {
    Require(cfg, "config");
    Require(json_patch, "patch");
    const json patch = json::parse(json_patch, nullptr, /*allow_exceptions=*/false);
    if (patch.is_discarded() || !patch.is_object()) {
      knowdiff::Fail(knowdiff::ErrorCode::kConfig, "config patch must be a JSON object");
    }
    json merged = knowdiff::ToJson(cfg->cfg);
    merged.merge_patch(patch);
    cfg->cfg = knowdiff::ConfigFromJson(merged);
  });
}

kd_status kd_config_dump(const kd_config* cfg, char** json_out) {
  return Call([&] {
    Require(cfg, "config");
    Emit(knowdiff::ToJson(cfg->cfg), json_out);
  });
}

void kd_config_free(kd_config* cfg) { delete cfg; }

kd_status kd_logset_generate(const kd_config* cfg, kd_logset** out) {
  return Call([&] {
    Require(cfg, "config");
    Require(out, "out");
    *out = new kd_logset{knowdiff::GenerateScenarios(cfg->cfg.generator)};
  });
}

kd_status kd_logset_load_dir(const char* dir, kd_logset** out) {
  return Call([&] {
    Require(dir, "dir");
    Require(out, "out");
    auto logs = knowdiff::LoadDriveLogDir(dir);
    if (logs.empty()) knowdiff::Fail(knowdiff::ErrorCode::kEmptyData, std::string("no logs in ") + dir);
    *out = new kd_logset{std::move(logs)};
  });
}

kd_status kd_logset_load_file(const char* path, kd_logset** out) {
  return Call([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new kd_logset{{knowdiff::LoadDriveLog(path)}};
  });
}

kd_status kd_logset_save_dir(const kd_logset* logs, const char* dir) {
  return Call([&] {
    Require(logs, "logset");
    Require(dir, "dir");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) knowdiff::Fail(knowdiff::ErrorCode::kIo, std::string("cannot create ") + dir + ": " + ec.message());
    for (std::size_t i = 0; i < logs->logs.size(); ++i) {
      knowdiff::SaveDriveLog(logs->logs[i],
                             std::filesystem::path(dir) / fmt::format("log_{:05d}.kdlog", i));
    }
  });
}

size_t kd_logset_size(const kd_logset* logs) { return logs == nullptr ? 0 : logs->logs.size(); }

kd_status kd_logset_coverage(const kd_logset* logs, char** json_out) {
  return Call([&] {
    Require(logs, "logset");
    json labels = json::object();
    for (const auto& [index, count] : knowdiff::LabelCoverage(logs->logs)) {
      labels[knowdiff::MetaAction::FromIndex(index).Label()] = count;
    }
    const std::size_t distinct = labels.size();
    Emit({{"labels", labels}, {"distinct", distinct}, {"logs", logs->logs.size()}}, json_out);
  });
}

void kd_logset_free(kd_logset* logs) { delete logs; }

kd_status kd_library_build(const kd_logset* logs, double window_s, kd_library** out) {
  return Call([&] {
    Require(logs, "logset");
    Require(out, "out");
    knowdiff::CheckLogSet(logs->logs);
    std::vector<knowdiff::Trajectory> segments;
    for (const auto& log : logs->logs) {
      auto s = knowdiff::SegmentLog(log, window_s);
      segments.insert(segments.end(), s.begin(), s.end());
    }
    if (segments.empty()) knowdiff::Fail(knowdiff::ErrorCode::kEmptyData, "no segments in the logs");
    *out = new kd_library{knowdiff::BuildLibrary(segments)};
  });
}

kd_status kd_library_load(const char* path, kd_library** out) {
  return Call([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new kd_library{knowdiff::LoadLibrary(path)};
  });
}

kd_status kd_library_save(const kd_library* lib, const char* path) {
  return Call([&] {
    Require(lib, "library");
    Require(path, "path");
    knowdiff::SaveLibrary(lib->lib, path);
  });
}

kd_status kd_library_summary(const kd_library* lib, char** json_out) {
  return Call([&] {
    Require(lib, "library");
    json entries = json::array();
    std::uint64_t total = 0;
    for (const auto& [index, e] : lib->lib.entries) {
      entries.push_back({{"label", e.action.Label()}, {"samples", e.sample_count}});
      total += e.sample_count;
    }
    Emit({{"entries", entries}, {"segments", total}}, json_out);
  });
}

void kd_library_free(kd_library* lib) { delete lib; }

kd_status kd_model_create(const kd_config* cfg, kd_model** out) {
  return Call([&] {
    Require(cfg, "config");
    Require(out, "out");
    *out = new kd_model{knowdiff::Checkpoint{
        knowdiff::Denoiser::Create(cfg->cfg.arch, cfg->cfg.init_seed), cfg->cfg.schedule, {}}};
  });
}

kd_status kd_model_load(const char* path, kd_model** out) {
  return Call([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new kd_model{knowdiff::LoadCheckpoint(path)};
  });
}

kd_status kd_model_save(const kd_model* model, const char* path) {
  return Call([&] {
    Require(model, "model");
    Require(path, "path");
    knowdiff::SaveCheckpoint(model->ckpt, path);
  });
}

kd_status kd_model_train(kd_model* model, const kd_logset* logs, const kd_library* lib,
                         const kd_config* cfg, kd_progress_fn progress, void* user) {
  return Call([&] {
    Require(model, "model");
    Require(logs, "logset");
    Require(cfg, "config");
    if (lib != nullptr && lib->lib.horizon != model->ckpt.model.arch().horizon) {
      knowdiff::Fail(knowdiff::ErrorCode::kIncompatible, "library horizon differs from the model");
    }
    const auto data = knowdiff::BuildTrainingSet(logs->logs);
    // Work on a copy so a failure leaves the handle untouched.
    knowdiff::Checkpoint work = model->ckpt;
    knowdiff::Train(work.model, work.sched, data, cfg->cfg.train, work.train,
                    [&](std::size_t step, double loss) {
                      if (progress != nullptr) progress(step, loss, user);
                    });
    model->ckpt = std::move(work);
  });
}

kd_status kd_model_losses(const kd_model* model, const double** losses, size_t* count) {
  return Call([&] {
    Require(model, "model");
    Require(losses, "losses");
    Require(count, "count");
    *losses = model->ckpt.train.losses.data();
    *count = model->ckpt.train.losses.size();
  });
}

size_t kd_model_parameter_count(const kd_model* model) {
  return model == nullptr ? 0 : model->ckpt.model.ParameterCount();
}

void kd_model_free(kd_model* model) { delete model; }

kd_status kd_planner_create(const char* kind, const kd_library* lib, const kd_model* model,
                            const kd_config* cfg, const char* provider, kd_planner** out) {
  return Call([&] {
    Require(kind, "kind");
    Require(out, "out");
    const std::string k = kind;
    const knowdiff::PipelineConfig defaults;
    const knowdiff::PipelineConfig& c = cfg != nullptr ? cfg->cfg : defaults;
    std::unique_ptr<knowdiff::Planner> impl;
    if (k == "expert") {
      impl = std::make_unique<knowdiff::ExpertPlanner>();
    } else if (k == "straight") {
      impl = std::make_unique<knowdiff::StraightPlanner>();
    } else if (k == "prior") {
      Require(lib, "library");
      impl = std::make_unique<knowdiff::PriorPlanner>(
          std::make_shared<const knowdiff::PriorLibrary>(lib->lib), MakeProvider(provider, c),
          c.planner.align);
    } else if (k == "knowdiffuser" || k == "knowdiffuser-full") {
      Require(lib, "library");
      Require(model, "model");
      knowdiff::KnowDiffuserOptions opts = c.planner;
      if (k == "knowdiffuser") opts.full_steps = 0;
      if (k == "knowdiffuser-full" && opts.full_steps == 0) opts.full_steps = 50;
      impl = std::make_unique<knowdiff::KnowDiffuserPlanner>(
          std::make_shared<const knowdiff::PriorLibrary>(lib->lib),
          std::make_shared<const knowdiff::Checkpoint>(model->ckpt), MakeProvider(provider, c), opts);
    } else {
      knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, "unknown planner " + k);
    }
    *out = new kd_planner{std::move(impl)};
  });
}

kd_status kd_planner_plan(kd_planner* planner, const kd_logset* logs, size_t index, size_t frame,
                          char** json_out) {
  return Call([&] {
    Require(planner, "planner");
    Require(logs, "logset");
    if (index >= logs->logs.size()) knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, "log index out of range");
    const auto& log = logs->logs[index];
    if (frame >= log.frames.size()) knowdiff::Fail(knowdiff::ErrorCode::kInvalidArgument, "frame out of range");
    knowdiff::CheckLogSet({log});
    const knowdiff::Observation obs = knowdiff::ObserveLogFrame(log, frame);
    const knowdiff::PlanRequest req{&obs, &log, static_cast<double>(frame) * log.dt, log.seed};
    const knowdiff::PlanOutput out = planner->impl->Plan(req);
    json decision = nullptr;
    if (out.decision) {
      const auto& d = *out.decision;
      decision = {{"action", d.action.Label()},
                  {"provider", std::string(knowdiff::ProviderKindName(d.provider))}};
      // Latency is only meaningful for remote calls and would make local
      // outputs differ between runs.
      if (d.provider == knowdiff::ProviderKind::kRemote) {
        decision["latency_ms"] = d.latency_ms;
        decision["raw_response"] = d.raw_response;
      }
    }
    Emit({{"planner", planner->impl->name()},
          {"scenario", log.kind + "-" + std::to_string(log.seed)},
          {"frame", frame},
          {"trajectory", TrajectoryJson(out.traj)},
          {"decision", decision},
          {"substituted", out.substituted},
          {"denoiser_calls", out.denoiser_calls}},
         json_out);
  });
}

void kd_planner_free(kd_planner* planner) { delete planner; }

kd_status kd_evaluate_open_loop(kd_planner* planner, const kd_logset* logs, char** json_out) {
  return Call([&] {
    Require(planner, "planner");
    Require(logs, "logset");
    Emit(knowdiff::ToJson(knowdiff::EvaluateOpenLoop(*planner->impl, logs->logs)), json_out);
  });
}

kd_status kd_evaluate_closed_loop(kd_planner* planner, const kd_logset* logs, const kd_config* cfg,
                                  int reactive, const char* trace_dir, char** json_out) {
  return Call([&] {
    Require(planner, "planner");
    Require(logs, "logset");
    knowdiff::SimConfig sim = cfg != nullptr ? cfg->cfg.sim : knowdiff::SimConfig{};
    if (reactive >= 0) sim.reactive = reactive != 0;
    sim.record_trace = trace_dir != nullptr;
    auto summary = knowdiff::EvaluateClosedLoop(*planner->impl, logs->logs, sim);
    if (trace_dir != nullptr) {
      std::error_code ec;
      std::filesystem::create_directories(trace_dir, ec);
      if (ec) knowdiff::Fail(knowdiff::ErrorCode::kIo, std::string("cannot create ") + trace_dir);
      for (std::size_t i = 0; i < summary.reports.size(); ++i) {
        knowdiff::WriteTraceCsv(summary.reports[i],
                                (std::filesystem::path(trace_dir) / fmt::format("trace_{:05d}.csv", i)).string());
      }
    }
    Emit(knowdiff::ToJson(summary), json_out);
  });
}

}  // extern "C"
