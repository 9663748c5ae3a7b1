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

#include "mosprob/pa.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mosprob/errors.hpp"

namespace mosprob
{

const char * to_string(ActionOrigin origin)
{
  switch (origin) {
    case ActionOrigin::kPerceptionInput:
      return "perception";
    case ActionOrigin::kReachabilityChoice:
      return "reach";
    case ActionOrigin::kInternal:
      return "internal";
  }
  return "internal";
}

double Distribution::mass() const
{
  double total = 0.0;
  for (const auto & [s, p] : support) {
    total += p;
  }
  return total;
}

double Distribution::prob(StateId s) const
{
  for (const auto & [t, p] : support) {
    if (t == s) {
      return p;
    }
  }
  return 0.0;
}

StateId Pa::add_state(std::string name, std::vector<std::string> labels, std::vector<double> features)
{
  const auto id = static_cast<StateId>(names_.size());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  names_.push_back(std::move(name));
  labels_.push_back(std::move(labels));
  features_.push_back(std::move(features));
  delta_.emplace_back();
  return id;
}

ActionId Pa::intern_action(const std::string & name, ActionOrigin origin)
{
  auto it = action_index_.find(name);
  if (it != action_index_.end()) {
    return it->second;
  }
  const auto id = static_cast<ActionId>(actions_.size());
  actions_.push_back(ActionLabel{name, origin});
  action_index_.emplace(name, id);
  return id;
}

void Pa::add_transition(StateId s, ActionId a, Distribution mu)
{
  auto & row = delta_.at(s);
  auto pos = std::upper_bound(
    row.begin(), row.end(), a, [](ActionId x, const Transition & t) { return x < t.action; });
  row.insert(pos, Transition{a, std::move(mu)});
}

void Pa::remove_transition(StateId s, ActionId a)
{
  auto & row = delta_.at(s);
  row.erase(
    std::remove_if(row.begin(), row.end(), [a](const Transition & t) { return t.action == a; }),
    row.end());
}

void Pa::clear_transitions(StateId s)
{
  delta_.at(s).clear();
}

void Pa::add_label(StateId s, const std::string & label)
{
  auto & ls = labels_.at(s);
  auto pos = std::lower_bound(ls.begin(), ls.end(), label);
  if (pos == ls.end() || *pos != label) {
    ls.insert(pos, label);
  }
}

std::optional<ActionId> Pa::find_action(const std::string & name) const
{
  auto it = action_index_.find(name);
  if (it == action_index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

const Transition * Pa::find_transition(StateId s, ActionId a) const
{
  const auto & row = delta_.at(s);
  auto pos = std::lower_bound(
    row.begin(), row.end(), a, [](const Transition & t, ActionId x) { return t.action < x; });
  if (pos == row.end() || pos->action != a) {
    return nullptr;
  }
  return &*pos;
}

bool Pa::has_label(StateId s, const std::string & label) const
{
  const auto & ls = labels_.at(s);
  return std::binary_search(ls.begin(), ls.end(), label);
}

std::optional<std::size_t> Pa::feature_index(const std::string & name) const
{
  for (std::size_t i = 0; i < feature_names_.size(); ++i) {
    if (feature_names_[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t Pa::num_transitions() const
{
  std::size_t n = 0;
  for (const auto & row : delta_) {
    n += row.size();
  }
  return n;
}

std::vector<std::string> validate(const Pa & m)
{
  std::vector<std::string> out;
  const auto n = m.num_states();
  auto where = [&](StateId s) { return "state " + m.state_name(s) + " (" + std::to_string(s) + ")"; };
  if (n == 0) {
    out.emplace_back("PA has no states");
    return out;
  }
  if (m.initial() >= n) {
    out.emplace_back("initial state out of range");
  }
  for (StateId s = 0; s < n; ++s) {
    if (m.features(s).size() != m.feature_names().size()) {
      out.push_back(where(s) + ": feature vector size does not match feature names");
    }
    const auto & row = m.transitions(s);
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto & t = row[i];
      if (t.action >= m.actions().size()) {
        out.push_back(where(s) + ": action id " + std::to_string(t.action) + " not in alphabet");
        continue;
      }
      const std::string act = " action " + m.action(t.action).name;
      if (i > 0 && row[i - 1].action == t.action) {
        out.push_back(where(s) + act + ": more than one distribution for the same action");
      }
      if (t.dist.support.empty()) {
        out.push_back(where(s) + act + ": empty distribution");
        continue;
      }
      std::vector<StateId> seen;
      for (const auto & [dest, p] : t.dist.support) {
        if (dest >= n) {
          out.push_back(where(s) + act + ": successor out of range");
        }
        if (!(p > 0.0) || p > 1.0 + kMassTolerance) {
          out.push_back(where(s) + act + ": probability outside (0, 1]");
        }
        seen.push_back(dest);
      }
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        out.push_back(where(s) + act + ": duplicate successor in support");
      }
      if (std::abs(t.dist.mass() - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << where(s) << act << ": distribution mass != 1 (" << t.dist.mass() << ")";
        out.push_back(os.str());
      }
    }
  }
  return out;
}

namespace
{

void require_valid(const Pa & m, const char * who)
{
  auto v = validate(m);
  if (!v.empty()) {
    throw ModelError(std::string(who) + ": invalid PA: " + v.front());
  }
}

// Per-state split of enabled actions into those private to this side and
// those shared with the other alphabet (as ids of this side).
struct SideIndex
{
  std::vector<std::vector<std::size_t>> private_tr;
  std::vector<std::vector<std::size_t>> shared_tr;
};

SideIndex index_side(const Pa & m, const std::vector<bool> & shared)
{
  SideIndex idx;
  idx.private_tr.resize(m.num_states());
  idx.shared_tr.resize(m.num_states());
  for (StateId s = 0; s < m.num_states(); ++s) {
    const auto & row = m.transitions(s);
    for (std::size_t i = 0; i < row.size(); ++i) {
      (shared[row[i].action] ? idx.shared_tr[s] : idx.private_tr[s]).push_back(i);
    }
  }
  return idx;
}

}  // namespace

Pa compose(const Pa & m1, const Pa & m2)
{
  require_valid(m1, "compose");
  require_valid(m2, "compose");

  Pa out;
  std::vector<ActionId> map1(m1.actions().size());
  std::vector<ActionId> map2(m2.actions().size());
  std::vector<bool> shared1(m1.actions().size(), false);
  std::vector<bool> shared2(m2.actions().size(), false);
  std::vector<ActionId> partner1(m1.actions().size(), kNoAction);
  std::vector<ActionId> partner2(m2.actions().size(), kNoAction);
  for (ActionId a = 0; a < m1.actions().size(); ++a) {
    map1[a] = out.intern_action(m1.action(a).name, m1.action(a).origin);
  }
  for (ActionId a = 0; a < m2.actions().size(); ++a) {
    map2[a] = out.intern_action(m2.action(a).name, m2.action(a).origin);
    if (auto b = m1.find_action(m2.action(a).name)) {
      shared2[a] = true;
      shared1[*b] = true;
      partner1[*b] = a;
      partner2[a] = *b;
    }
  }

  std::vector<std::string> fnames;
  for (const auto & f : m1.feature_names()) {
    fnames.push_back(m2.feature_index(f) ? "left." + f : f);
  }
  for (const auto & f : m2.feature_names()) {
    fnames.push_back(m1.feature_index(f) ? "right." + f : f);
  }
  out.set_feature_names(fnames);

  const SideIndex idx1 = index_side(m1, shared1);
  const SideIndex idx2 = index_side(m2, shared2);

  std::map<std::pair<StateId, StateId>, StateId> ids;
  std::deque<std::pair<StateId, StateId>> queue;
  auto get = [&](StateId a, StateId b) -> StateId {
    auto key = std::make_pair(a, b);
    auto it = ids.find(key);
    if (it != ids.end()) {
      return it->second;
    }
    std::vector<std::string> labels = m1.labels(a);
    labels.insert(labels.end(), m2.labels(b).begin(), m2.labels(b).end());
    std::vector<double> feats = m1.features(a);
    feats.insert(feats.end(), m2.features(b).begin(), m2.features(b).end());
    const StateId id = out.add_state(
      "(" + m1.state_name(a) + "," + m2.state_name(b) + ")", std::move(labels), std::move(feats));
    ids.emplace(key, id);
    queue.push_back(key);
    return id;
  };

  out.set_initial(get(m1.initial(), m2.initial()));
  while (!queue.empty()) {
    const auto [s1, s2] = queue.front();
    queue.pop_front();
    const StateId src = ids.at({s1, s2});
    const auto & row1 = m1.transitions(s1);
    const auto & row2 = m2.transitions(s2);

    for (std::size_t i : idx1.private_tr[s1]) {
      Distribution mu;
      for (const auto & [t, p] : row1[i].dist.support) {
        mu.support.emplace_back(get(t, s2), p);
      }
      out.add_transition(src, map1[row1[i].action], std::move(mu));
    }
    for (std::size_t i : idx2.private_tr[s2]) {
      Distribution mu;
      for (const auto & [t, p] : row2[i].dist.support) {
        mu.support.emplace_back(get(s1, t), p);
      }
      out.add_transition(src, map2[row2[i].action], std::move(mu));
    }
    auto sync = [&](const Transition & t1, const Transition & t2) {
      Distribution mu;
      for (const auto & [a, p] : t1.dist.support) {
        for (const auto & [b, q] : t2.dist.support) {
          mu.support.emplace_back(get(a, b), p * q);
        }
      }
      out.add_transition(src, map1[t1.action], std::move(mu));
    };
    if (idx1.shared_tr[s1].size() <= idx2.shared_tr[s2].size()) {
      for (std::size_t i : idx1.shared_tr[s1]) {
        if (const Transition * t2 = m2.find_transition(s2, partner1[row1[i].action])) {
          sync(row1[i], *t2);
        }
      }
    } else {
      for (std::size_t j : idx2.shared_tr[s2]) {
        if (const Transition * t1 = m1.find_transition(s1, partner2[row2[j].action])) {
          sync(*t1, row2[j]);
        }
      }
    }
  }
  return out;
}

std::vector<ActionId> enabled_actions(const Pa & m, StateId s)
{
  if (s >= m.num_states()) {
    throw std::out_of_range("enabled_actions: unknown state id " + std::to_string(s));
  }
  std::vector<ActionId> out;
  for (const auto & t : m.transitions(s)) {
    out.push_back(t.action);
  }
  return out;
}

std::vector<bool> reachable_states(const Pa & m, StateId from)
{
  std::vector<bool> seen(m.num_states(), false);
  std::vector<StateId> stack{from};
  seen.at(from) = true;
  while (!stack.empty()) {
    const StateId s = stack.back();
    stack.pop_back();
    for (const auto & t : m.transitions(s)) {
      for (const auto & [d, p] : t.dist.support) {
        if (!seen[d]) {
          seen[d] = true;
          stack.push_back(d);
        }
      }
    }
  }
  return seen;
}

Dtmc apply_scheduler(const Pa & m, const Scheduler & sigma)
{
  Dtmc d;
  std::unordered_map<StateId, std::size_t> local;
  std::deque<StateId> queue;
  auto get = [&](StateId s) {
    auto it = local.find(s);
    if (it != local.end()) {
      return it->second;
    }
    const std::size_t id = d.origin.size();
    local.emplace(s, id);
    d.origin.push_back(s);
    d.action.push_back(kNoAction);
    d.rows.emplace_back();
    d.labels.push_back(m.labels(s));
    queue.push_back(s);
    return id;
  };
  get(m.initial());
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    if (m.is_terminal(s)) {
      continue;
    }
    const ActionId a = s < sigma.choice.size() ? sigma.choice[s] : kNoAction;
    const Transition * t = a == kNoAction ? nullptr : m.find_transition(s, a);
    if (t == nullptr) {
      throw std::invalid_argument(
        "apply_scheduler: scheduler picks no enabled action in state " + m.state_name(s));
    }
    Distribution row;
    for (const auto & [dest, p] : t->dist.support) {
      row.support.emplace_back(static_cast<StateId>(get(dest)), p);
    }
    const std::size_t li = local.at(s);
    d.rows[li] = std::move(row);
    d.action[li] = a;
  }
  return d;
}

BigCount count_schedulers_over(const Pa & m, const std::vector<bool> & domain)
{
  BigCount total = 1;
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (domain[s] && !m.is_terminal(s)) {
      total *= static_cast<unsigned>(m.transitions(s).size());
    }
  }
  return total;
}

BigCount count_schedulers(const Pa & m)
{
  return count_schedulers_over(m, reachable_states(m));
}

Pa make_absorbing(const Pa & m, const std::function<bool(StateId)> & pred)
{
  Pa out = m;
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (pred(s)) {
      out.clear_transitions(s);
    }
  }
  return out;
}

Pa restrict_to_reachable(const Pa & m)
{
  std::vector<StateId> order{m.initial()};
  std::unordered_map<StateId, StateId> local{{m.initial(), 0}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (const auto & t : m.transitions(order[i])) {
      for (const auto & [d, p] : t.dist.support) {
        if (local.emplace(d, static_cast<StateId>(order.size())).second) {
          order.push_back(d);
        }
      }
    }
  }
  Pa out;
  for (const auto & a : m.actions()) {
    out.intern_action(a.name, a.origin);
  }
  out.set_feature_names(m.feature_names());
  for (StateId s : order) {
    out.add_state(m.state_name(s), m.labels(s), m.features(s));
  }
  for (StateId i = 0; i < order.size(); ++i) {
    for (const auto & t : m.transitions(order[i])) {
      Distribution mu;
      for (const auto & [d, p] : t.dist.support) {
        mu.support.emplace_back(local.at(d), p);
      }
      out.add_transition(i, t.action, std::move(mu));
    }
  }
  out.set_initial(0);
  return out;
}

Pa reroot(const Pa & m, StateId s)
{
  if (s >= m.num_states()) {
    throw std::out_of_range("reroot: unknown state id");
  }
  Pa out = m;
  out.set_initial(s);
  return out;
}

SchedulerEnumerator::SchedulerEnumerator(const Pa & m, std::uint64_t cap)
: m_(&m)
{
  const auto reach = reachable_states(m);
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (reach[s] && !m.is_terminal(s)) {
      states_.push_back(s);
      options_.push_back(enabled_actions(m, s));
    }
  }
  const BigCount total = count_schedulers(m);
  if (total > cap) {
    throw CapExceeded(
      "scheduler count " + total.str() + " exceeds cap " + std::to_string(cap), total.str());
  }
  size_ = total.convert_to<std::uint64_t>();
  digits_.assign(states_.size(), 0);
}

bool SchedulerEnumerator::next(Scheduler & out)
{
  if (produced_ == size_) {
    return false;
  }
  if (produced_ > 0) {
    for (std::size_t i = digits_.size(); i-- > 0;) {
      if (++digits_[i] < options_[i].size()) {
        break;
      }
      digits_[i] = 0;
    }
  }
  ++produced_;
  out.choice.assign(m_->num_states(), kNoAction);
  for (std::size_t i = 0; i < states_.size(); ++i) {
    out.choice[states_[i]] = options_[i][digits_[i]];
  }
  return true;
}

Scheduler SchedulerEnumerator::at(std::uint64_t index) const
{
  if (index >= size_) {
    throw std::out_of_range("scheduler index out of range");
  }
  Scheduler out;
  out.choice.assign(m_->num_states(), kNoAction);
  for (std::size_t i = states_.size(); i-- > 0;) {
    const auto radix = options_[i].size();
    out.choice[states_[i]] = options_[i][index % radix];
    index /= radix;
  }
  return out;
}

std::vector<Scheduler> enumerate_schedulers(const Pa & m, std::uint64_t cap)
{
  SchedulerEnumerator it(m, cap);
  std::vector<Scheduler> out;
  out.reserve(it.size());
  Scheduler s;
  while (it.next(s)) {
    out.push_back(s);
  }
  return out;
}

Path sample_path(const Dtmc & d, std::size_t horizon, const std::function<double()> & uniform)
{
  Path path;
  std::size_t cur = 0;
  for (std::size_t step = 0;; ++step) {
    if (step == horizon || d.is_terminal(cur)) {
      path.push_back(PathStep{d.origin[cur], kNoAction});
      return path;
    }
    path.push_back(PathStep{d.origin[cur], d.action[cur]});
    const auto & sup = d.rows[cur].support;
    const double u = uniform();
    double acc = 0.0;
    std::size_t next = sup.back().first;
    for (const auto & [t, p] : sup) {
      acc += p;
      if (u < acc) {
        next = t;
        break;
      }
    }
    cur = next;
  }
}

}  // namespace mosprob
