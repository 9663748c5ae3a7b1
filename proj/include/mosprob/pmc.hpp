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
#include <string>
#include <vector>

#include "mosprob/pa.hpp"

namespace mosprob
{

/// Invariant "never reach a state labelled bad_label", optionally bounded to
/// the first horizon steps.
struct SafetyProperty
{
  std::string bad_label;
  std::optional<std::size_t> horizon;
};

struct ViOptions
{
  double tol = 1e-10;
  std::uint64_t max_iterations = 1000000;
  /// When set, receives the initial-state safety value after every iteration.
  std::vector<double> * trace = nullptr;
};

struct CheckResult
{
  double probability = 0.0;
  std::uint64_t iterations = 0;
  double residual = 0.0;
  double wall_time_s = 0.0;
  std::vector<std::string> warnings;
};

std::vector<bool> bad_states(const Pa & m, const SafetyProperty & psi);

/// Copy of m whose bad states have no outgoing transitions. A warning is
/// appended for every bad state that had to be rewritten.
Pa absorb_bad_states(const Pa & m, const SafetyProperty & psi, std::vector<std::string> * warnings);

CheckResult min_safety_prob(const Pa & m, const SafetyProperty & psi, const ViOptions & opt = {});
CheckResult max_safety_prob(const Pa & m, const SafetyProperty & psi, const ViOptions & opt = {});

double prob_under_scheduler(const Pa & m, const Scheduler & sigma, const SafetyProperty & psi);

/// Safety probability under sigma from each root (the chain is re-rooted at
/// every root; one solve serves all of them).
std::vector<double> safety_from_states(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi,
  const std::vector<StateId> & roots);

std::vector<Scheduler> min_schedulers(
  const Pa & m, const SafetyProperty & psi, double tol = 1e-9,
  std::uint64_t cap = kDefaultSchedulerCap);

struct DecompositionTerms
{
  double total = 0.0;
  double safe_avoiding = 0.0;
  double reach = 0.0;
  double from_state = 0.0;
  double residual = 0.0;
};

/// Terms of Pr(psi) = Pr(psi and never s) + Pr(eventually s) * Pr_{M(s)}(psi).
/// The first two come from forward mass propagation, the others from
/// prob_under_scheduler, so the residual compares two independent routes.
DecompositionTerms decomposition_terms(
  const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, StateId s);
double decomposition_check(const Pa & m, const Scheduler & sigma, const SafetyProperty & psi, StateId s);

}  // namespace mosprob
