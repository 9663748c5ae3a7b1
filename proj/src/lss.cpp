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

#include "mosprob/lss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "mosprob/errors.hpp"
#include "mosprob/parallel.hpp"

namespace mosprob
{

namespace
{

constexpr std::uint64_t kTraceDomain = 0x74726163652d6c73ULL;

SafetyProperty effective_property(const SafetyProperty & psi, const LssConfig & cfg)
{
  SafetyProperty out = psi;
  if (cfg.horizon) {
    out.horizon = cfg.horizon;
  }
  return out;
}

StateId draw(const Distribution & mu, double u)
{
  double acc = 0.0;
  for (const auto & [s, p] : mu.support) {
    acc += p;
    if (u < acc) {
      return s;
    }
  }
  return mu.support.back().first;
}

/// One trace; true when the property holds on it.
bool run_trace(
  const Pa & m, const std::function<ActionId(StateId)> & choice, const SafetyProperty & psi,
  CounterRng & rng, std::size_t max_len)
{
  StateId s = m.initial();
  const std::size_t limit = psi.horizon.value_or(max_len);
  for (std::size_t step = 0;; ++step) {
    if (m.has_label(s, psi.bad_label)) {
      return false;
    }
    if (m.is_terminal(s) || step == limit) {
      if (!psi.horizon && step == limit) {
        throw NonConvergence("trace exceeded the path length cap without terminating");
      }
      return true;
    }
    const ActionId a = choice(s);
    const Transition * t = a == kNoAction ? nullptr : m.find_transition(s, a);
    if (t == nullptr) {
      throw std::invalid_argument("scheduler has no enabled action for state " + m.state_name(s));
    }
    s = draw(t->dist, rng.next_double());
  }
}

double estimate_with(
  const Pa & m, const std::function<ActionId(StateId)> & choice, const SafetyProperty & psi,
  std::uint64_t traces, std::uint64_t master_seed, std::uint64_t seed, std::size_t max_len)
{
  std::uint64_t ok = 0;
  for (std::uint64_t j = 0; j < traces; ++j) {
    CounterRng rng = trace_stream(master_seed, seed, j);
    ok += run_trace(m, choice, psi, rng, max_len) ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(traces);
}

std::function<ActionId(StateId)> fixed_choice(const Scheduler & sigma)
{
  return [&sigma](StateId s) { return s < sigma.choice.size() ? sigma.choice[s] : kNoAction; };
}

}  // namespace

void validate_config(const LssConfig & cfg)
{
  if (cfg.n < 1) {
    throw std::invalid_argument("LSS needs n >= 1");
  }
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) {
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
}

std::uint64_t traces_needed(double epsilon, double delta)
{
  const double n = std::log(2.0 / delta) / (2.0 * epsilon * epsilon);
  // Guard against ceil(461.0000000001) style rounding.
  const double r = std::round(n);
  if (std::abs(n - r) < 1e-9) {
    return static_cast<std::uint64_t>(r);
  }
  return static_cast<std::uint64_t>(std::ceil(n));
}

ActionId sampled_choice(const Pa & m, std::uint64_t master_seed, std::uint64_t seed, StateId s)
{
  const auto & ts = m.transitions(s);
  if (ts.empty()) {
    return kNoAction;
  }
  if (ts.size() == 1) {
    return ts.front().action;
  }
  CounterRng rng(master_seed, seed, s);
  return ts[rng.below(ts.size())].action;
}

Scheduler sample_scheduler(const Pa & m, std::uint64_t master_seed, std::uint64_t seed)
{
  Scheduler sigma;
  sigma.choice.resize(m.num_states(), kNoAction);
  for (StateId s = 0; s < m.num_states(); ++s) {
    sigma.choice[s] = sampled_choice(m, master_seed, seed, s);
  }
  return sigma;
}

CounterRng trace_stream(std::uint64_t master_seed, std::uint64_t seed, std::uint64_t trace)
{
  return CounterRng(mix64(master_seed ^ kTraceDomain), seed, trace);
}

double estimate_prob(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, double epsilon, double delta,
  std::uint64_t master_seed, std::uint64_t seed, std::size_t max_path_length)
{
  return estimate_with(
    m, fixed_choice(sigma), psi, traces_needed(epsilon, delta), master_seed, seed, max_path_length);
}

LssResult lss_min(const Pa & m, const SafetyProperty & psi, const LssConfig & cfg)
{
  validate_config(cfg);
  const SafetyProperty prop = effective_property(psi, cfg);
  LssResult res;
  res.traces_per_scheduler = cfg.exact ? 0 : traces_needed(cfg.epsilon, cfg.delta);
  res.estimates.assign(cfg.n, 0.0);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    res.seeds.push_back(i + 1);
  }
  parallel_for(cfg.n, cfg.jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t seed = res.seeds[i];
      if (cfg.exact) {
        res.estimates[i] = prob_under_scheduler(m, sample_scheduler(m, cfg.master_seed, seed), prop);
        continue;
      }
      std::unordered_map<StateId, ActionId> cache;
      auto lazy = [&](StateId s) {
        auto it = cache.find(s);
        if (it == cache.end()) {
          it = cache.emplace(s, sampled_choice(m, cfg.master_seed, seed, s)).first;
        }
        return it->second;
      };
      res.estimates[i] = estimate_with(
        m, lazy, prop, res.traces_per_scheduler, cfg.master_seed, seed, cfg.max_path_length);
    }
  });
  res.minimum = *std::min_element(res.estimates.begin(), res.estimates.end());
  return res;
}

Scheduler project_scheduler(const Scheduler & sigma, const TrimReport & report)
{
  Scheduler out = sigma;
  for (const auto & t : report.states) {
    if (t.kept_action == kNoAction) {
      throw std::invalid_argument("trim report has no kept action; was it produced by trim_lss?");
    }
    if (t.state >= out.choice.size()) {
      throw std::invalid_argument("trim report refers to an unknown state");
    }
    out.choice[t.state] = t.kept_action;
  }
  return out;
}

CoupledLssResult coupled_lss(
  const Pa & m, const Pa & trimmed, const TrimReport & report, const SafetyProperty & psi,
  const LssConfig & cfg)
{
  validate_config(cfg);
  if (m.num_states() != trimmed.num_states()) {
    throw std::invalid_argument("trimmed model has a different state space");
  }
  for (const auto & t : report.states) {
    if (
      t.state >= trimmed.num_states() || trimmed.transitions(t.state).size() != 1 ||
      trimmed.find_transition(t.state, t.kept_action) == nullptr ||
      m.find_transition(t.state, t.kept_action) == nullptr) {
      throw std::invalid_argument("trim report is inconsistent with the models");
    }
  }
  const SafetyProperty prop = effective_property(psi, cfg);
  CoupledLssResult res;
  for (LssResult * r : {&res.full, &res.trimmed}) {
    r->traces_per_scheduler = cfg.exact ? 0 : traces_needed(cfg.epsilon, cfg.delta);
    r->estimates.assign(cfg.n, 0.0);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      r->seeds.push_back(i + 1);
    }
  }
  parallel_for(cfg.n, cfg.jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint64_t seed = i + 1;
      const Scheduler sigma = sample_scheduler(m, cfg.master_seed, seed);
      const Scheduler proj = project_scheduler(sigma, report);
      if (cfg.exact) {
        res.full.estimates[i] = prob_under_scheduler(m, sigma, prop);
        res.trimmed.estimates[i] = prob_under_scheduler(trimmed, proj, prop);
      } else {
        const auto n = res.full.traces_per_scheduler;
        res.full.estimates[i] =
          estimate_with(m, fixed_choice(sigma), prop, n, cfg.master_seed, seed, cfg.max_path_length);
        res.trimmed.estimates[i] = estimate_with(
          trimmed, fixed_choice(proj), prop, n, cfg.master_seed, seed, cfg.max_path_length);
      }
    }
  });
  for (std::size_t i = 0; i < cfg.n; ++i) {
    if (res.full.estimates[i] < res.trimmed.estimates[i] - 1e-12) {
      ++res.violations;
    }
  }
  res.full.minimum = *std::min_element(res.full.estimates.begin(), res.full.estimates.end());
  res.trimmed.minimum =
    *std::min_element(res.trimmed.estimates.begin(), res.trimmed.estimates.end());
  return res;
}

FsdVerdict fsd_check(const std::vector<double> & a, const std::vector<double> & b)
{
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("fsd_check needs non-empty samples");
  }
  std::vector<double> sa = a;
  std::vector<double> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  auto cdf = [](const std::vector<double> & v, double x) {
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) /
           static_cast<double>(v.size());
  };
  FsdVerdict out;
  out.dominates = true;
  for (const auto * pool : {&sa, &sb}) {
    for (double x : *pool) {
      const double gap = cdf(sa, x) - cdf(sb, x);
      out.max_gap = std::max(out.max_gap, gap);
      if (gap > 1e-12) {
        out.dominates = false;
      }
    }
  }
  return out;
}

}  // namespace mosprob
