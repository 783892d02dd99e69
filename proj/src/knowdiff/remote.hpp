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

// Chat-completion decision provider with retry and heuristic fallback.

#ifndef KNOWDIFF_REMOTE_HPP_
#define KNOWDIFF_REMOTE_HPP_

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>

#include "knowdiff/decision.hpp"

namespace knowdiff {

inline constexpr const char* kApiKeyEnv = "KNOWDIFF_API_KEY";

struct RemoteConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "gpt-4o";
  double timeout_s = 10.0;
  int max_retries = 2;             // attempts after the first
  double requests_per_second = 5.0;
  double burst = 5.0;
};

// Reads the key from the environment; kConfig when unset or empty.
std::string ResolveApiKey();

// Requests issued by every remote client in this process.
std::uint64_t NetworkRequestCount();

class TokenBucket {
 public:
  TokenBucket(double rate_per_s, double burst);
  // Blocks until one token is available.
  void Acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

// Never throws for network-class failures; returns a heuristic record after
// the retry budget is exhausted. Throws kConfig before any request when the
// key is missing or the endpoint is malformed.
DecisionRecord RemoteDecide(const Prompt& prompt, const Observation& obs,
                            const RemoteConfig& cfg, TokenBucket* bucket = nullptr);

class RemoteProvider final : public DecisionProvider {
 public:
  explicit RemoteProvider(RemoteConfig cfg);
  DecisionRecord Decide(const Observation& obs) override;

 private:
  RemoteConfig cfg_;
  TokenBucket bucket_;
};

}  // namespace knowdiff

#endif  // KNOWDIFF_REMOTE_HPP_
