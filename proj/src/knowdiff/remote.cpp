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

#include "knowdiff/remote.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <json.hpp>
#include <regex>
#include <thread>

#include "knowdiff/error.hpp"

namespace knowdiff {
namespace {

using nlohmann::json;

std::atomic<std::uint64_t> g_requests{0};

constexpr const char* kSystemMessage =
    "You are a careful driving decision assistant. Answer with one action tag.";
constexpr const char* kCorrection =
    "Your previous reply did not contain a valid label. Reply with exactly one "
    "label from the allowed list, formatted as <action>DIRECTION|SPEED</action>.";

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint ParseEndpoint(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/\s]+)(/\S*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    Fail(ErrorCode::kConfig, "malformed endpoint url: " + url);
  }
  return {m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

std::optional<std::string> ExtractContent(const std::string& body) {
  const json doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return std::nullopt;
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const json& first = (*choices)[0];
  if (!first.contains("message") || !first["message"].is_object()) return std::nullopt;
  const json& msg = first["message"];
  if (!msg.contains("content") || !msg["content"].is_string()) return std::nullopt;
  return msg["content"].get<std::string>();
}

}  // namespace

std::string ResolveApiKey() {
  const char* key = std::getenv(kApiKeyEnv);
  if (key == nullptr || *key == '\0') {
    Fail(ErrorCode::kConfig, std::string(kApiKeyEnv) + " is not set");
  }
  return key;
}

std::uint64_t NetworkRequestCount() { return g_requests.load(); }

TokenBucket::TokenBucket(double rate_per_s, double burst)
    : rate_(rate_per_s), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {
  if (!(rate_per_s > 0.0)) Fail(ErrorCode::kConfig, "rate limit must be > 0");
}

void TokenBucket::Acquire() {
  for (;;) {
    double wait_s = 0.0;
    {
      std::lock_guard<std::mutex> lock(mu_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_s = (1.0 - tokens_) / rate_;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
  }
}

DecisionRecord RemoteDecide(const Prompt& prompt, const Observation& obs,
                            const RemoteConfig& cfg, TokenBucket* bucket) {
  const std::string key = ResolveApiKey();
  const Endpoint ep = ParseEndpoint(cfg.endpoint);
  if (cfg.max_retries < 0) Fail(ErrorCode::kConfig, "max_retries must be >= 0");
  if (!(cfg.timeout_s > 0.0)) Fail(ErrorCode::kConfig, "timeout_s must be > 0");

  const auto start = std::chrono::steady_clock::now();
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(cfg.timeout_s));

  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  client.set_bearer_token_auth(key);

  json messages = json::array({
      {{"role", "system"}, {"content", kSystemMessage}},
      {{"role", "user"}, {"content", prompt.text}},
  });

  DecisionRecord rec;
  rec.ego_speed = obs.ego.speed;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (bucket != nullptr) bucket->Acquire();
    const json body = {{"model", cfg.model}, {"messages", messages}, {"temperature", 0}};
    ++g_requests;
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
      spdlog::warn("remote decide attempt {}: {}", attempt + 1, httplib::to_string(res.error()));
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      spdlog::warn("remote decide attempt {}: http status {}", attempt + 1, res->status);
      continue;
    }
    const auto content = ExtractContent(res->body);
    if (content) {
      if (auto action = ParseActionTag(*content)) {
        rec.action = *action;
        rec.provider = ProviderKind::kRemote;
        rec.raw_response = *content;
        rec.latency_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start).count();
        return rec;
      }
    }
    spdlog::warn("remote decide attempt {}: no valid action label", attempt + 1);
    messages.push_back({{"role", "user"}, {"content", kCorrection}});
  }

  spdlog::warn("remote decide exhausted {} attempts; using heuristic", cfg.max_retries + 1);
  rec.action = HeuristicDecide(obs);
  rec.provider = ProviderKind::kHeuristic;
  rec.latency_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start).count();
  return rec;
}

RemoteProvider::RemoteProvider(RemoteConfig cfg)
    : cfg_(std::move(cfg)), bucket_(cfg_.requests_per_second, cfg_.burst) {
  ResolveApiKey();
  ParseEndpoint(cfg_.endpoint);
}

DecisionRecord RemoteProvider::Decide(const Observation& obs) {
  return RemoteDecide(EncodePrompt(obs), obs, cfg_, &bucket_);
}

}  // namespace knowdiff
