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

#include "mosprob/pmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "mosprob/errors.hpp"

namespace mosprob
{

std::vector<bool> bad_states(const Pa & m, const SafetyProperty & psi)
{
  std::vector<bool> bad(m.num_states(), false);
  for (StateId s = 0; s < m.num_states(); ++s) {
    bad[s] = m.has_label(s, psi.bad_label);
  }
  return bad;
}

Pa absorb_bad_states(const Pa & m, const SafetyProperty & psi, std::vector<std::string> * warnings)
{
  const auto bad = bad_states(m, psi);
  std::size_t rewritten = 0;
  for (StateId s = 0; s < m.num_states(); ++s) {
    if (bad[s] && !m.is_terminal(s)) {
      ++rewritten;
    }
  }
  if (rewritten == 0) {
    return m;
  }
  if (warnings != nullptr) {
    warnings->push_back(
      std::to_string(rewritten) + " state(s) labelled '" + psi.bad_label +
      "' had outgoing transitions; rewritten to absorbing");
  }
  return make_absorbing(m, [&](StateId s) { return bad[s]; });
}

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

enum class Opt { kMaxReach, kMinReach };

// Reach-bad probabilities for all states by value iteration (or exactly
// horizon backward-induction steps when the property is bounded).
CheckResult optimise_reach(const Pa & m0, const SafetyProperty & psi, const ViOptions & opt, Opt mode)
{
  const auto t0 = Clock::now();
  CheckResult res;
  const Pa m = absorb_bad_states(m0, psi, &res.warnings);
  const auto n = m.num_states();
  const auto bad = bad_states(m, psi);
  const auto reach = reachable_states(m);

  std::vector<StateId> live;
  for (StateId s = 0; s < n; ++s) {
    if (reach[s] && !bad[s] && !m.is_terminal(s)) {
      live.push_back(s);
    }
  }

  std::vector<double> x(n, 0.0);
  for (StateId s = 0; s < n; ++s) {
    x[s] = bad[s] ? 1.0 : 0.0;
  }

  auto backup = [&](StateId s, const std::vector<double> & cur) {
    double best = mode == Opt::kMaxReach ? -1.0 : 2.0;
    for (const auto & t : m.transitions(s)) {
      double v = 0.0;
      for (const auto & [d, p] : t.dist.support) {
        v += p * cur[d];
      }
      best = mode == Opt::kMaxReach ? std::max(best, v) : std::min(best, v);
    }
    return best;
  };

  if (psi.horizon) {
    std::vector<double> next = x;
    for (std::size_t k = 0; k < *psi.horizon; ++k) {
      for (StateId s : live) {
        next[s] = backup(s, x);
      }
      x.swap(next);
      ++res.iterations;
      if (opt.trace != nullptr) {
        opt.trace->push_back(1.0 - x[m.initial()]);
      }
    }
    res.probability = 1.0 - x[m.initial()];
    res.residual = 0.0;
    res.wall_time_s = seconds_since(t0);
    return res;
  }

  // States whose optimal reach probability is exactly zero, found on the graph.
  std::vector<bool> positive(n, false);
  if (mode == Opt::kMaxReach) {
    std::vector<std::vector<StateId>> pred(n);
    for (StateId s = 0; s < n; ++s) {
      for (const auto & t : m.transitions(s)) {
        for (const auto & [d, p] : t.dist.support) {
          pred[d].push_back(s);
        }
      }
    }
    std::vector<StateId> stack;
    for (StateId s = 0; s < n; ++s) {
      if (bad[s]) {
        positive[s] = true;
        stack.push_back(s);
      }
    }
    while (!stack.empty()) {
      const StateId s = stack.back();
      stack.pop_back();
      for (StateId q : pred[s]) {
        if (!positive[q]) {
          positive[q] = true;
          stack.push_back(q);
        }
      }
    }
  } else {
    positive = bad;
    bool changed = true;
    while (changed) {
      changed = false;
      for (StateId s : live) {
        if (positive[s]) {
          continue;
        }
        bool all = true;
        for (const auto & t : m.transitions(s)) {
          bool hit = false;
          for (const auto & [d, p] : t.dist.support) {
            hit = hit || positive[d];
          }
          all = all && hit;
        }
        if (all) {
          positive[s] = true;
          changed = true;
        }
      }
    }
  }
  std::vector<StateId> maybe;
  for (StateId s : live) {
    if (positive[s]) {
      maybe.push_back(s);
    }
  }

  std::vector<double> next = x;
  for (;;) {
    if (res.iterations >= opt.max_iterations) {
      throw NonConvergence(
        "value iteration did not reach tolerance within " + std::to_string(opt.max_iterations) +
        " iterations");
    }
    double diff = 0.0;
    for (StateId s : maybe) {
      next[s] = backup(s, x);
      diff = std::max(diff, std::abs(next[s] - x[s]));
    }
    x.swap(next);
    ++res.iterations;
    res.residual = diff;
    if (opt.trace != nullptr) {
      opt.trace->push_back(1.0 - x[m.initial()]);
    }
    if (diff < opt.tol) {
      break;
    }
  }
  res.probability = 1.0 - x[m.initial()];
  res.wall_time_s = seconds_since(t0);
  return res;
}

struct LocalChain
{
  std::vector<StateId> origin;
  std::unordered_map<StateId, std::size_t> local;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<char> bad;
};

LocalChain build_chain(
  const Pa & m, const Scheduler & sigma, const std::vector<bool> & bad,
  const std::vector<StateId> & roots)
{
  LocalChain c;
  std::deque<StateId> queue;
  auto get = [&](StateId s) {
    auto it = c.local.find(s);
    if (it != c.local.end()) {
      return it->second;
    }
    const std::size_t id = c.origin.size();
    c.local.emplace(s, id);
    c.origin.push_back(s);
    c.rows.emplace_back();
    c.bad.push_back(bad[s] ? 1 : 0);
    queue.push_back(s);
    return id;
  };
  for (StateId r : roots) {
    if (r >= m.num_states()) {
      throw std::out_of_range("unknown root state");
    }
    get(r);
  }
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    if (bad[s] || m.is_terminal(s)) {
      continue;
    }
    const ActionId a = s < sigma.choice.size() ? sigma.choice[s] : kNoAction;
    const Transition * t = a == kNoAction ? nullptr : m.find_transition(s, a);
    if (t == nullptr) {
      throw std::invalid_argument(
        "scheduler picks no enabled action in state " + m.state_name(s));
    }
    std::vector<std::pair<std::size_t, double>> row;
    for (const auto & [d, p] : t->dist.support) {
      row.emplace_back(get(d), p);
    }
    c.rows[c.local.at(s)] = std::move(row);
  }
  return c;
}

// Topological order of the chain, or empty when it has a cycle.
std::vector<std::size_t> topo_order(const LocalChain & c)
{
  const auto n = c.origin.size();
  std::vector<std::size_t> indeg(n, 0);
  for (const auto & row : c.rows) {
    for (const auto & [d, p] : row) {
      ++indeg[d];
    }
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) {
      order.push_back(i);
    }
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (const auto & [d, p] : c.rows[order[k]]) {
      if (--indeg[d] == 0) {
        order.push_back(d);
      }
    }
  }
  if (order.size() != n) {
    order.clear();
  }
  return order;
}

std::vector<double> reach_bad(const LocalChain & c, const std::optional<std::size_t> & horizon)
{
  const auto n = c.origin.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = c.bad[i] ? 1.0 : 0.0;
  }
  if (horizon) {
    std::vector<double> next = x;
    for (std::size_t k = 0; k < *horizon; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        if (c.bad[i] || c.rows[i].empty()) {
          continue;
        }
        double v = 0.0;
        for (const auto & [d, p] : c.rows[i]) {
          v += p * x[d];
        }
        next[i] = v;
      }
      x.swap(next);
    }
    return x;
  }

  const auto order = topo_order(c);
  if (!order.empty()) {
    for (std::size_t k = order.size(); k-- > 0;) {
      const std::size_t i = order[k];
      if (c.bad[i] || c.rows[i].empty()) {
        continue;
      }
      double v = 0.0;
      for (const auto & [d, p] : c.rows[i]) {
        v += p * x[d];
      }
      x[i] = v;
    }
    return x;
  }

  // Cyclic chain: solve (I - P) x = b over the states that can reach bad.
  std::vector<std::vector<std::size_t>> pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto & [d, p] : c.rows[i]) {
      pred[d].push_back(i);
    }
  }
  std::vector<char> can(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.bad[i]) {
      can[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const auto i = stack.back();
    stack.pop_back();
    for (auto q : pred[i]) {
      if (!can[q]) {
        can[q] = 1;
        stack.push_back(q);
      }
    }
  }
  std::vector<long> col(n, -1);
  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < n; ++i) {
    if (can[i] && !c.bad[i]) {
      col[i] = static_cast<long>(unknown.size());
      unknown.push_back(i);
    }
  }
  if (unknown.empty()) {
    return x;
  }
  const auto u = static_cast<Eigen::Index>(unknown.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(u);
  for (Eigen::Index r = 0; r < u; ++r) {
    trip.emplace_back(r, r, 1.0);
    for (const auto & [d, p] : c.rows[unknown[static_cast<std::size_t>(r)]]) {
      if (c.bad[d]) {
        b[r] += p;
      } else if (col[d] >= 0) {
        trip.emplace_back(r, col[d], -p);
      }
    }
  }
  Eigen::SparseMatrix<double> a(u, u);
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("hitting-probability system is singular");
  }
  const Eigen::VectorXd sol = lu.solve(b);
  for (Eigen::Index r = 0; r < u; ++r) {
    x[unknown[static_cast<std::size_t>(r)]] = std::clamp(sol[r], 0.0, 1.0);
  }
  return x;
}

}  // namespace

CheckResult min_safety_prob(const Pa & m, const SafetyProperty & psi, const ViOptions & opt)
{
  return optimise_reach(m, psi, opt, Opt::kMaxReach);
}

CheckResult max_safety_prob(const Pa & m, const SafetyProperty & psi, const ViOptions & opt)
{
  return optimise_reach(m, psi, opt, Opt::kMinReach);
}

std::vector<double> safety_from_states(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi,
  const std::vector<StateId> & roots)
{
  const auto chain = build_chain(m, sigma, bad_states(m, psi), roots);
  const auto x = reach_bad(chain, psi.horizon);
  std::vector<double> out;
  out.reserve(roots.size());
  for (StateId r : roots) {
    out.push_back(1.0 - x[chain.local.at(r)]);
  }
  return out;
}

double prob_under_scheduler(const Pa & m, const Scheduler & sigma, const SafetyProperty & psi)
{
  return safety_from_states(m, sigma, psi, {m.initial()}).front();
}

std::vector<Scheduler> min_schedulers(
  const Pa & m, const SafetyProperty & psi, double tol, std::uint64_t cap)
{
  SchedulerEnumerator it(m, cap);
  std::vector<std::pair<double, Scheduler>> all;
  all.reserve(it.size());
  Scheduler s;
  double best = std::numeric_limits<double>::infinity();
  while (it.next(s)) {
    const double p = prob_under_scheduler(m, s, psi);
    best = std::min(best, p);
    all.emplace_back(p, s);
  }
  std::vector<Scheduler> out;
  for (auto & [p, sch] : all) {
    if (p <= best + tol) {
      out.push_back(std::move(sch));
    }
  }
  return out;
}

DecompositionTerms decomposition_terms(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, StateId s)
{
  if (psi.horizon) {
    throw std::invalid_argument("decomposition_check needs an unbounded property");
  }
  const auto bad = bad_states(m, psi);
  if (topo_order(build_chain(m, sigma, bad, {m.initial()})).empty()) {
    throw std::invalid_argument("decomposition_check: chain has infinite paths");
  }

  // Forward mass propagation with s made absorbing.
  auto cut = bad;
  cut[s] = true;
  const auto chain = build_chain(m, sigma, cut, {m.initial()});
  const auto order = topo_order(chain);
  std::vector<double> mass(chain.origin.size(), 0.0);
  mass[0] = 1.0;
  DecompositionTerms t;
  for (std::size_t i : order) {
    const StateId orig = chain.origin[i];
    if (orig == s) {
      t.reach += mass[i];
    } else if (bad[orig]) {
      continue;
    } else if (chain.rows[i].empty()) {
      t.safe_avoiding += mass[i];
    } else {
      for (const auto & [d, p] : chain.rows[i]) {
        mass[d] += mass[i] * p;
      }
    }
  }
  t.total = prob_under_scheduler(m, sigma, psi);
  // When s is never reached sigma need not be defined below it; the product
  // term is zero either way.
  t.from_state = t.reach > 0.0 ? prob_under_scheduler(reroot(m, s), sigma, psi) : 0.0;
  t.residual = std::abs(t.total - (t.safe_avoiding + t.reach * t.from_state));
  return t;
}

double decomposition_check(const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, StateId s)
{
  return decomposition_terms(m, sigma, psi, s).residual;
}

}  // namespace mosprob
