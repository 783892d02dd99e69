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
#include <httplib.h>
#include <stdlib.h>

#include <atomic>
#include <chrono>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "knowdiff/decision.hpp"
#include "knowdiff/remote.hpp"
#include "test_util.hpp"

using namespace knowdiff;
using nlohmann::json;

namespace {

// In-process chat endpoint whose reply is chosen by `mode`.
class StubServer {
 public:
  enum class Mode { kOk, kGarbage, kStatus500, kSlow };

  StubServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mu_);
        bodies_.push_back(json::parse(req.body));
        auth_ = req.get_header_value("Authorization");
      }
      switch (mode_.load()) {
        case Mode::kOk:
          res.set_content(Reply("Sure. <action>RightTurn|Decelerate</action>"), "application/json");
          break;
        case Mode::kGarbage:
          res.set_content(Reply("I would drive carefully."), "application/json");
          break;
        case Mode::kStatus500:
          res.status = 500;
          res.set_content("oops", "text/plain");
          break;
        case Mode::kSlow:
          std::this_thread::sleep_for(std::chrono::milliseconds(800));
          res.set_content(Reply("<action>RightTurn|Decelerate</action>"), "application/json");
          break;
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  RemoteConfig Config() const {
    RemoteConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    cfg.timeout_s = 0.3;
    cfg.max_retries = 2;
    return cfg;
  }
  void set_mode(Mode m) { mode_ = m; }
  std::vector<json> bodies() {
    std::lock_guard<std::mutex> lock(mu_);
    return bodies_;
  }
  std::string auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }

 private:
  static std::string Reply(const std::string& content) {
    return json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<Mode> mode_{Mode::kOk};
  std::mutex mu_;
  std::vector<json> bodies_;
  std::string auth_;
};

Observation Obs() { return ObserveLogFrame(kdtest::StraightLog(2.0), 0); }

struct KeyGuard {
  explicit KeyGuard(const char* v) {
    if (v) ::setenv(kApiKeyEnv, v, 1);
    else ::unsetenv(kApiKeyEnv);
  }
  ~KeyGuard() { ::unsetenv(kApiKeyEnv); }
};

}  // namespace

TEST_CASE("remote decision parses a well-formed reply") {
  KeyGuard key("test-key");
  StubServer stub;
  const Observation obs = Obs();
  const auto before = NetworkRequestCount();
  const DecisionRecord r = RemoteDecide(EncodePrompt(obs), obs, stub.Config());
  CHECK(NetworkRequestCount() - before == 1);
  CHECK(r.provider == ProviderKind::kRemote);
  CHECK(r.action.Label() == "RightTurn|Decelerate");
  CHECK(r.raw_response.find("<action>") != std::string::npos);
  CHECK(stub.auth() == "Bearer test-key");
  const auto bodies = stub.bodies();
  REQUIRE(bodies.size() == 1);
  CHECK(bodies[0]["messages"].size() == 2);
  CHECK(bodies[0]["messages"][1]["content"] == EncodePrompt(obs).text);
}

TEST_CASE("unparseable replies are retried with a correction, then fall back") {
  KeyGuard key("test-key");
  StubServer stub;
  stub.set_mode(StubServer::Mode::kGarbage);
  const Observation obs = Obs();
  const auto before = NetworkRequestCount();
  const DecisionRecord r = RemoteDecide(EncodePrompt(obs), obs, stub.Config());
  CHECK(NetworkRequestCount() - before == 3);
  CHECK(r.provider == ProviderKind::kHeuristic);
  CHECK(r.action == HeuristicDecide(obs));
  const auto bodies = stub.bodies();
  REQUIRE(bodies.size() == 3);
  CHECK(bodies[1]["messages"].size() == 3);
  CHECK(bodies[2]["messages"].size() == 4);
  CHECK(bodies[2]["messages"][3]["role"] == "user");
}

TEST_CASE("server errors and timeouts fall back without throwing") {
  KeyGuard key("test-key");
  StubServer stub;
  const Observation obs = Obs();
  stub.set_mode(StubServer::Mode::kStatus500);
  auto before = NetworkRequestCount();
  DecisionRecord r = RemoteDecide(EncodePrompt(obs), obs, stub.Config());
  CHECK(NetworkRequestCount() - before == 3);
  CHECK(r.provider == ProviderKind::kHeuristic);

  stub.set_mode(StubServer::Mode::kSlow);
  RemoteConfig cfg = stub.Config();
  cfg.max_retries = 0;
  before = NetworkRequestCount();
  r = RemoteDecide(EncodePrompt(obs), obs, cfg);
  CHECK(NetworkRequestCount() - before == 1);
  CHECK(r.provider == ProviderKind::kHeuristic);
  CHECK(r.latency_ms < 800.0);
}

TEST_CASE("unreachable endpoint falls back") {
  KeyGuard key("test-key");
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.timeout_s = 0.2;
  cfg.max_retries = 1;
  const Observation obs = Obs();
  CHECK(RemoteDecide(EncodePrompt(obs), obs, cfg).provider == ProviderKind::kHeuristic);
}

TEST_CASE("missing key or malformed endpoint fails before any request") {
  const Observation obs = Obs();
  const auto before = NetworkRequestCount();
  {
    KeyGuard key(nullptr);
    kdtest::ExpectCode([&] { RemoteDecide(EncodePrompt(obs), obs, RemoteConfig{}); },
                       ErrorCode::kConfig);
    kdtest::ExpectCode([&] { RemoteProvider p(RemoteConfig{}); }, ErrorCode::kConfig);
  }
  {
    KeyGuard key("");
    kdtest::ExpectCode([] { ResolveApiKey(); }, ErrorCode::kConfig);
  }
  {
    KeyGuard key("k");
    RemoteConfig cfg;
    cfg.endpoint = "not a url";
    kdtest::ExpectCode([&] { RemoteDecide(EncodePrompt(obs), obs, cfg); }, ErrorCode::kConfig);
  }
  CHECK(NetworkRequestCount() == before);
}

TEST_CASE("token bucket paces requests beyond the burst") {
  TokenBucket bucket(20.0, 2.0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 6; ++i) bucket.Acquire();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  // Two free tokens, then four at 50 ms each.
  CHECK(elapsed > 0.18);
  CHECK(elapsed < 1.0);
  kdtest::ExpectCode([] { TokenBucket b(0.0, 1.0); }, ErrorCode::kConfig);
}
