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

// High-level decision layer: scene -> prompt -> meta-action.

#ifndef KNOWDIFF_DECISION_HPP_
#define KNOWDIFF_DECISION_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "knowdiff/meta_action.hpp"
#include "knowdiff/scene.hpp"

namespace knowdiff {

inline constexpr std::string_view kActionSchemaTag = "action-tag/v1";
inline constexpr std::size_t kPromptAgentBudget = 8;

struct Prompt {
  std::string text;
  std::string schema_tag{kActionSchemaTag};
};

enum class ProviderKind { kHeuristic, kRemote };
std::string_view ProviderKindName(ProviderKind kind);

struct DecisionRecord {
  MetaAction action;
  ProviderKind provider = ProviderKind::kHeuristic;
  double latency_ms = 0.0;
  std::string raw_response;  // remote only
  double ego_speed = 0.0;    // speed of the observation that was decided on
};

// Deterministic four-section prompt ending with the answer instruction.
Prompt EncodePrompt(const Observation& obs);

// Extracts the first <action>...</action> span and validates the label.
std::optional<MetaAction> ParseActionTag(std::string_view response);

// Rule-table stand-in for the language model; total and deterministic.
MetaAction HeuristicDecide(const Observation& obs);

// True iff the last `window` decisions share one label while the ego speed
// across them spans more than 2 m/s.
bool DetectCollapse(const std::vector<DecisionRecord>& history, std::size_t window);

class DecisionProvider {
 public:
  virtual ~DecisionProvider() = default;
  virtual DecisionRecord Decide(const Observation& obs) = 0;
};

class HeuristicProvider final : public DecisionProvider {
 public:
  DecisionRecord Decide(const Observation& obs) override;
};

// Scene facts the heuristic and the prompt share.
struct RouteSummary {
  bool has_route = false;
  double lateral_offset = 0.0;  // ego left of the route centerline, m
  double remaining_m = 0.0;
  double upcoming_turn_deg = 0.0;  // signed net change of the next turn lane
  double upcoming_turn_distance_m = 0.0;
  bool turn_ahead = false;
};
RouteSummary SummarizeRoute(const Observation& obs, double lookahead_m = 30.0);

}  // namespace knowdiff

#endif  // KNOWDIFF_DECISION_HPP_
