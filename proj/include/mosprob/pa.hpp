// Copyright 2026 mosprob Authors
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

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace mosprob
{

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using BigCount = boost::multiprecision::cpp_int;

inline constexpr ActionId kNoAction = std::numeric_limits<ActionId>::max();
inline constexpr double kMassTolerance = 1e-12;
inline constexpr std::uint64_t kDefaultSchedulerCap = 1000000;

enum class ActionOrigin { kPerceptionInput, kReachabilityChoice, kInternal };

const char * to_string(ActionOrigin origin);

struct ActionLabel
{
  std::string name;
  ActionOrigin origin = ActionOrigin::kInternal;
};

struct Distribution
{
  std::vector<std::pair<StateId, double>> support;

  static Distribution dirac(StateId s) { return Distribution{{{s, 1.0}}}; }

  [[nodiscard]] bool is_dirac() const { return support.size() == 1; }
  [[nodiscard]] StateId target() const { return support.front().first; }
  [[nodiscard]] double mass() const;
  [[nodiscard]] double prob(StateId s) const;
};

struct Transition
{
  ActionId action = kNoAction;
  Distribution dist;
};

/// Finite probabilistic automaton. Transitions of a state are kept sorted by
/// action id; every state carries labels and a feature vector whose meaning is
/// given by feature_names() (orders compare these, never raw ids).
class Pa
{
public:
  StateId add_state(
    std::string name, std::vector<std::string> labels = {}, std::vector<double> features = {});
  ActionId intern_action(const std::string & name, ActionOrigin origin);
  void add_transition(StateId s, ActionId a, Distribution mu);
  void remove_transition(StateId s, ActionId a);
  void clear_transitions(StateId s);
  void set_initial(StateId s) { initial_ = s; }
  void set_feature_names(std::vector<std::string> names) { feature_names_ = std::move(names); }
  void add_label(StateId s, const std::string & label);

  [[nodiscard]] std::size_t num_states() const { return names_.size(); }
  [[nodiscard]] StateId initial() const { return initial_; }
  [[nodiscard]] const std::vector<ActionLabel> & actions() const { return actions_; }
  [[nodiscard]] const ActionLabel & action(ActionId a) const { return actions_.at(a); }
  [[nodiscard]] std::optional<ActionId> find_action(const std::string & name) const;
  [[nodiscard]] const std::vector<Transition> & transitions(StateId s) const { return delta_.at(s); }
  [[nodiscard]] const Transition * find_transition(StateId s, ActionId a) const;
  [[nodiscard]] bool is_terminal(StateId s) const { return delta_.at(s).empty(); }
  [[nodiscard]] const std::string & state_name(StateId s) const { return names_.at(s); }
  [[nodiscard]] const std::vector<std::string> & labels(StateId s) const { return labels_.at(s); }
  [[nodiscard]] bool has_label(StateId s, const std::string & label) const;
  [[nodiscard]] const std::vector<std::string> & feature_names() const { return feature_names_; }
  [[nodiscard]] const std::vector<double> & features(StateId s) const { return features_.at(s); }
  [[nodiscard]] std::optional<std::size_t> feature_index(const std::string & name) const;
  [[nodiscard]] std::size_t num_transitions() const;

private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> labels_;
  std::vector<std::vector<double>> features_;
  std::vector<std::vector<Transition>> delta_;
  std::vector<ActionLabel> actions_;
  std::unordered_map<std::string, ActionId> action_index_;
  std::vector<std::string> feature_names_;
  StateId initial_ = 0;
};

/// Memoryless deterministic scheduler: choice[s] is the action taken in s, or
/// kNoAction for terminal (or never visited) states.
struct Scheduler
{
  std::vector<ActionId> choice;
};

/// Fully probabilistic chain induced by a scheduler. Local state 0 is the
/// initial state; origin maps local ids back to the PA.
struct Dtmc
{
  std::vector<StateId> origin;
  std::vector<ActionId> action;
  std::vector<Distribution> rows;
  std::vector<std::vector<std::string>> labels;

  [[nodiscard]] std::size_t size() const { return origin.size(); }
  [[nodiscard]] bool is_terminal(std::size_t i) const { return rows[i].support.empty(); }
};

struct PathStep
{
  StateId state = 0;
  ActionId action = kNoAction;
};

/// Sequence of visited states; the last step has action kNoAction.
using Path = std::vector<PathStep>;

std::vector<std::string> validate(const Pa & m);
Pa compose(const Pa & m1, const Pa & m2);
std::vector<ActionId> enabled_actions(const Pa & m, StateId s);
std::vector<bool> reachable_states(const Pa & m, StateId from);
inline std::vector<bool> reachable_states(const Pa & m) { return reachable_states(m, m.initial()); }
Dtmc apply_scheduler(const Pa & m, const Scheduler & sigma);
BigCount count_schedulers(const Pa & m);
/// Scheduler count over an explicit state domain instead of the reachable set.
BigCount count_schedulers_over(const Pa & m, const std::vector<bool> & domain);

/// Removes the outgoing transitions of every state matching the predicate.
Pa make_absorbing(const Pa & m, const std::function<bool(StateId)> & pred);
/// Drops states unreachable from the initial state, renumbering in BFS order.
Pa restrict_to_reachable(const Pa & m);
/// Same PA with a different initial state.
Pa reroot(const Pa & m, StateId s);

/// Lexicographic enumeration of all memoryless deterministic schedulers over
/// the non-terminal reachable states, ascending state id most significant.
class SchedulerEnumerator
{
public:
  explicit SchedulerEnumerator(const Pa & m, std::uint64_t cap = kDefaultSchedulerCap);

  [[nodiscard]] std::uint64_t size() const { return size_; }
  [[nodiscard]] const std::vector<StateId> & choice_states() const { return states_; }
  /// Writes the next scheduler into out; false once all have been produced.
  bool next(Scheduler & out);
  /// Scheduler with the given lexicographic index.
  [[nodiscard]] Scheduler at(std::uint64_t index) const;

private:
  const Pa * m_;
  std::vector<StateId> states_;
  std::vector<std::vector<ActionId>> options_;
  std::vector<std::size_t> digits_;
  std::uint64_t size_ = 0;
  std::uint64_t produced_ = 0;
};

std::vector<Scheduler> enumerate_schedulers(const Pa & m, std::uint64_t cap = kDefaultSchedulerCap);

/// Samples a path of at most horizon steps, stopping early at terminal states.
/// uniform() must return values in [0, 1).
Path sample_path(const Dtmc & d, std::size_t horizon, const std::function<double()> & uniform);

}  // namespace mosprob
