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

#include "knowdiff/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

using nlohmann::json;

// Reads declared keys of one section and rejects anything else.
class Section {
 public:
  Section(const json& root, const char* name) : name_(name) {
    if (!root.contains(name)) return;
    node_ = &root.at(name);
    if (!node_->is_object()) Fail(ErrorCode::kConfig, std::string(name) + " must be an object");
  }
  ~Section() noexcept(false) {
    if (node_ == nullptr || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.contains(key)) Fail(ErrorCode::kConfig, "unknown key " + name_ + "." + key);
    }
  }

  template <typename T>
  void Get(const char* key, T& out) {
    seen_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return;
    const json& v = node_->at(key);
    const bool ok = [&] {
      if constexpr (std::is_same_v<T, bool>) return v.is_boolean();
      else if constexpr (std::is_unsigned_v<T>) return v.is_number_unsigned();
      else if constexpr (std::is_integral_v<T>) return v.is_number_integer();
      else if constexpr (std::is_floating_point_v<T>) return v.is_number();
      else if constexpr (std::is_same_v<T, std::string>) return v.is_string();
      else return v.is_array();
    }();
    if (!ok) Fail(ErrorCode::kConfig, "wrong type for " + name_ + "." + key);
    out = v.get<T>();
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

void PipelineConfig::Validate() const {
  if (generator.count == 0) Fail(ErrorCode::kConfig, "generator.count must be >= 1");
  if (!(window_s > 0.0)) Fail(ErrorCode::kConfig, "library.window_s must be > 0");
  arch.Validate();
  schedule.Validate();
  train.Validate();
  try {
    planner.infer.Validate();
  } catch (const Error& e) {
    Fail(ErrorCode::kConfig, e.what());
  }
  if (!(sim.sim_dt > 0.0 && sim.replan_hz > 0.0)) {
    Fail(ErrorCode::kConfig, "sim.sim_dt and sim.replan_hz must be > 0");
  }
  if (remote.max_retries < 0 || !(remote.timeout_s > 0.0) || !(remote.requests_per_second > 0.0)) {
    Fail(ErrorCode::kConfig, "remote limits must be positive");
  }
}

PipelineConfig ConfigFromJson(const json& j) {
  if (!j.is_object()) Fail(ErrorCode::kConfig, "config root must be an object");
  static const std::set<std::string> kSections = {"generator", "library", "model", "schedule",
                                                  "train", "infer", "sim", "remote"};
  for (const auto& [key, value] : j.items()) {
    if (!kSections.contains(key)) Fail(ErrorCode::kConfig, "unknown config section " + key);
  }
  PipelineConfig c;
  try {
    {
      Section s(j, "generator");
      s.Get("count", c.generator.count);
      s.Get("seed", c.generator.seed);
      s.Get("kinds", c.generator.kinds);
      s.Get("duration_s", c.generator.duration_s);
    }
    {
      Section s(j, "library");
      s.Get("window_s", c.window_s);
    }
    {
      Section s(j, "model");
      s.Get("width", c.arch.width);
      s.Get("layers", c.arch.layers);
      s.Get("position_scale", c.arch.position_scale);
      s.Get("speed_scale", c.arch.speed_scale);
      s.Get("renormalize_heading", c.arch.renormalize_heading);
      s.Get("init_seed", c.init_seed);
    }
    {
      Section s(j, "schedule");
      s.Get("beta_min", c.schedule.beta_min);
      s.Get("beta_max", c.schedule.beta_max);
      s.Get("eps_t", c.schedule.eps_t);
    }
    {
      Section s(j, "train");
      s.Get("steps", c.train.steps);
      s.Get("batch_size", c.train.batch_size);
      s.Get("learning_rate", c.train.learning_rate);
      s.Get("beta1", c.train.beta1);
      s.Get("beta2", c.train.beta2);
      s.Get("adam_eps", c.train.adam_eps);
      s.Get("final_lr_fraction", c.train.final_lr_fraction);
      s.Get("seed", c.train.seed);
    }
    {
      Section s(j, "infer");
      s.Get("t1", c.planner.infer.t1);
      s.Get("t2", c.planner.infer.t2);
      s.Get("exact_marginal", c.planner.infer.exact_marginal);
      s.Get("second_call", c.planner.infer.second_call);
      s.Get("align", c.planner.align);
      s.Get("seed", c.planner.seed);
      s.Get("full_steps", c.planner.full_steps);
    }
    {
      Section s(j, "sim");
      s.Get("sim_dt", c.sim.sim_dt);
      s.Get("replan_hz", c.sim.replan_hz);
      s.Get("reactive", c.sim.reactive);
      s.Get("horizon_s", c.sim.horizon_s);
      s.Get("lookahead_gain", c.sim.lookahead_gain);
      s.Get("speed_gain", c.sim.speed_gain);
      s.Get("along_track_gain", c.sim.along_track_gain);
      s.Get("jerk_limit", c.sim.jerk_limit);
      s.Get("comfort_accel", c.sim.comfort_accel);
      s.Get("comfort_jerk", c.sim.comfort_jerk);
      s.Get("drivable_half_width", c.sim.drivable_half_width);
    }
    {
      Section s(j, "remote");
      s.Get("endpoint", c.remote.endpoint);
      s.Get("model", c.remote.model);
      s.Get("timeout_s", c.remote.timeout_s);
      s.Get("max_retries", c.remote.max_retries);
      s.Get("requests_per_second", c.remote.requests_per_second);
      s.Get("burst", c.remote.burst);
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, std::string("bad config value: ") + e.what());
  }
  c.Validate();
  return c;
}

json ToJson(const PipelineConfig& c) {
  return {
      {"generator",
       {{"count", c.generator.count}, {"seed", c.generator.seed}, {"kinds", c.generator.kinds},
        {"duration_s", c.generator.duration_s}}},
      {"library", {{"window_s", c.window_s}}},
      {"model",
       {{"width", c.arch.width}, {"layers", c.arch.layers},
        {"position_scale", c.arch.position_scale}, {"speed_scale", c.arch.speed_scale},
        {"renormalize_heading", c.arch.renormalize_heading}, {"init_seed", c.init_seed}}},
      {"schedule",
       {{"beta_min", c.schedule.beta_min}, {"beta_max", c.schedule.beta_max},
        {"eps_t", c.schedule.eps_t}}},
      {"train",
       {{"steps", c.train.steps}, {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate}, {"beta1", c.train.beta1},
        {"beta2", c.train.beta2}, {"adam_eps", c.train.adam_eps},
        {"final_lr_fraction", c.train.final_lr_fraction}, {"seed", c.train.seed}}},
      {"infer",
       {{"t1", c.planner.infer.t1}, {"t2", c.planner.infer.t2},
        {"exact_marginal", c.planner.infer.exact_marginal},
        {"second_call", c.planner.infer.second_call}, {"align", c.planner.align},
        {"seed", c.planner.seed}, {"full_steps", c.planner.full_steps}}},
      {"sim",
       {{"sim_dt", c.sim.sim_dt}, {"replan_hz", c.sim.replan_hz}, {"reactive", c.sim.reactive},
        {"horizon_s", c.sim.horizon_s}, {"lookahead_gain", c.sim.lookahead_gain},
        {"speed_gain", c.sim.speed_gain}, {"along_track_gain", c.sim.along_track_gain},
        {"jerk_limit", c.sim.jerk_limit}, {"comfort_accel", c.sim.comfort_accel},
        {"comfort_jerk", c.sim.comfort_jerk},
        {"drivable_half_width", c.sim.drivable_half_width}}},
      {"remote",
       {{"endpoint", c.remote.endpoint}, {"model", c.remote.model},
        {"timeout_s", c.remote.timeout_s}, {"max_retries", c.remote.max_retries},
        {"requests_per_second", c.remote.requests_per_second}, {"burst", c.remote.burst}}},
  };
}

PipelineConfig ParseConfig(const std::string& text) {
  const json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) Fail(ErrorCode::kConfig, "config is not valid JSON");
  return ConfigFromJson(j);
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

}  // namespace knowdiff
