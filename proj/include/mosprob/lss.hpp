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
#include <optional>
#include <vector>

#include "mosprob/mos.hpp"
#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"
#include "mosprob/rng.hpp"

namespace mosprob
{

struct LssConfig
{
  std::size_t n = 1;
  double epsilon = 0.05;
  double delta = 0.2;
  std::uint64_t master_seed = 0;
  /// Overrides the property horizon when set.
  std::optional<std::size_t> horizon;
  /// Replace trace sampling by the exact per-scheduler solve.
  bool exact = false;
  unsigned jobs = 1;
  /// Paths of unbounded properties longer than this raise NonConvergence.
  std::size_t max_path_length = 10000000;
};

void validate_config(const LssConfig & cfg);

struct LssResult
{
  std::vector<double> estimates;
  double minimum = 1.0;
  std::uint64_t traces_per_scheduler = 0;
  std::vector<std::uint64_t> seeds;
};

/// ceil(ln(2/delta) / (2 epsilon^2)).
std::uint64_t traces_needed(double epsilon, double delta);

/// Action picked in s by the scheduler with the given seed.
ActionId sampled_choice(const Pa & m, std::uint64_t master_seed, std::uint64_t seed, StateId s);
/// Materializes the sampled scheduler on every non-terminal state.
Scheduler sample_scheduler(const Pa & m, std::uint64_t master_seed, std::uint64_t seed);

/// Stream of trace randomness for one (master seed, scheduler seed) pair,
/// kept apart from the scheduler choice keys.
CounterRng trace_stream(std::uint64_t master_seed, std::uint64_t seed, std::uint64_t trace);

/// Mean of traces_needed(epsilon, delta) Bernoulli trials, trace j drawn from
/// trace_stream(master_seed, seed, j).
double estimate_prob(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, double epsilon, double delta,
  std::uint64_t master_seed, std::uint64_t seed, std::size_t max_path_length = 10000000);

/// Samples cfg.n schedulers with seeds 1..n and returns the smallest estimate.
LssResult lss_min(const Pa & m, const SafetyProperty & psi, const LssConfig & cfg);

struct CoupledLssResult
{
  LssResult full;
  LssResult trimmed;
  /// Seeds whose full-model estimate is below the trimmed one.
  std::size_t violations = 0;
};

/// Scheduler for the trimmed model induced by sigma: kept action at trimmed
/// states, sigma elsewhere.
Scheduler project_scheduler(const Scheduler & sigma, const TrimReport & report);

CoupledLssResult coupled_lss(
  const Pa & m, const Pa & trimmed, const TrimReport & report, const SafetyProperty & psi,
  const LssConfig & cfg);

struct FsdVerdict
{
  bool dominates = false;
  /// max over pooled points of F_a(x) - F_b(x), floored at 0.
  double max_gap = 0.0;
};

/// First-order stochastic dominance of sample a over sample b.
FsdVerdict fsd_check(const std::vector<double> & a, const std::vector<double> & b);

}  // namespace mosprob
