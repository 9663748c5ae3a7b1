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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "mosprob/errors.hpp"
#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"
#include "mosprob/rng.hpp"
#include "oracles.hpp"

using namespace mosprob;

namespace
{

const SafetyProperty kBad{"bad", std::nullopt};

// One choice state with two actions leading to bad with p and q.
Pa choice_of(double p, double q)
{
  Pa m;
  m.add_state("c");
  m.add_state("boom", {"bad"});
  m.add_state("ok");
  m.add_transition(0, m.intern_action("a", ActionOrigin::kReachabilityChoice), Distribution{{{1, p}, {2, 1.0 - p}}});
  m.add_transition(0, m.intern_action("b", ActionOrigin::kReachabilityChoice), Distribution{{{1, q}, {2, 1.0 - q}}});
  return m;
}

double enum_min(const Pa & m, const SafetyProperty & psi)
{
  double best = 1.0;
  for (const auto & s : enumerate_schedulers(m)) {
    best = std::min(best, prob_under_scheduler(m, s, psi));
  }
  return best;
}

double enum_max(const Pa & m, const SafetyProperty & psi)
{
  double best = 0.0;
  for (const auto & s : enumerate_schedulers(m)) {
    best = std::max(best, prob_under_scheduler(m, s, psi));
  }
  return best;
}

// Random model with cycles: actions may go back to lower ids.
Pa random_cyclic(std::mt19937_64 & g, std::size_t n)
{
  Pa m;
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<StateId> any(0, static_cast<StateId>(n - 1));
  for (std::size_t s = 0; s < n; ++s) {
    m.add_state("s" + std::to_string(s), (s > 0 && u(g) < 0.2) ? std::vector<std::string>{"bad"} : std::vector<std::string>{});
  }
  m.add_state("exit");
  for (StateId s = 0; s < n; ++s) {
    if (m.has_label(s, "bad")) {
      continue;
    }
    const int k = 1 + static_cast<int>(u(g) * 2);
    for (int a = 0; a < k; ++a) {
      const StateId x = any(g);
      const StateId y = any(g);
      Distribution mu;
      if (x == y) {
        mu.support = {{x, 0.8}, {static_cast<StateId>(n), 0.2}};
      } else {
        mu.support = {{x, 0.5}, {y, 0.3}, {static_cast<StateId>(n), 0.2}};
      }
      m.add_transition(s, m.intern_action("s" + std::to_string(s) + "a" + std::to_string(a), ActionOrigin::kReachabilityChoice), mu);
    }
  }
  return m;
}

}  // namespace

TEST(MinSafety, AlwaysSafeIsOne)
{
  Pa m;
  m.add_state("a");
  m.add_state("b");
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution::dirac(1));
  EXPECT_DOUBLE_EQ(min_safety_prob(m, kBad).probability, 1.0);
}

TEST(MinSafety, DirectFailure)
{
  Pa m;
  m.add_state("a");
  m.add_state("boom", {"bad"});
  m.add_state("ok");
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution{{{1, 0.3}, {2, 0.7}}});
  EXPECT_NEAR(min_safety_prob(m, kBad).probability, 0.7, 1e-12);
  EXPECT_NEAR(max_safety_prob(m, kBad).probability, 0.7, 1e-12);
}

TEST(MaxSafety, PicksSaferAction)
{
  const Pa m = choice_of(0.2, 0.5);
  EXPECT_NEAR(max_safety_prob(m, kBad).probability, 0.8, 1e-12);
  EXPECT_NEAR(min_safety_prob(m, kBad).probability, 0.5, 1e-12);
}

TEST(MinSafety, MatchesEnumerationOnRandomAcyclicModels)
{
  std::mt19937_64 g(101);
  for (int trial = 0; trial < 60; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {10, 3, 0.25, 0.5});
    if (count_schedulers(m) > 2000) {
      continue;
    }
    EXPECT_NEAR(min_safety_prob(m, kBad).probability, enum_min(m, kBad), 1e-8);
    EXPECT_NEAR(max_safety_prob(m, kBad).probability, enum_max(m, kBad), 1e-8);
  }
}

TEST(MinSafety, MatchesEnumerationOnCyclicModels)
{
  std::mt19937_64 g(77);
  for (int trial = 0; trial < 40; ++trial) {
    const Pa m = random_cyclic(g, 6);
    if (count_schedulers(m) > 2000) {
      continue;
    }
    EXPECT_NEAR(min_safety_prob(m, kBad).probability, enum_min(m, kBad), 1e-8);
    EXPECT_NEAR(max_safety_prob(m, kBad).probability, enum_max(m, kBad), 1e-8);
    for (const auto & s : enumerate_schedulers(m)) {
      EXPECT_NEAR(prob_under_scheduler(m, s, kBad), oracle::gauss_safety(m, s, "bad")[m.initial()], 1e-10);
    }
  }
}

TEST(MinSafety, BoundedMatchesEnumerationAndPathSum)
{
  std::mt19937_64 g(9);
  for (int trial = 0; trial < 30; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {9, 2, 0.3, 0.5});
    for (std::size_t T : {0u, 1u, 2u, 4u}) {
      const SafetyProperty psi{"bad", T};
      double lo = 1.0;
      for (const auto & s : enumerate_schedulers(m)) {
        const double p = prob_under_scheduler(m, s, psi);
        EXPECT_NEAR(p, oracle::path_sum_safety(m, s, "bad", T, m.initial()), 1e-12);
        lo = std::min(lo, p);
      }
      EXPECT_NEAR(min_safety_prob(m, psi).probability, lo, 1e-12);
    }
  }
}

TEST(MinSafety, HorizonZero)
{
  Pa m = choice_of(0.5, 0.5);
  EXPECT_EQ(min_safety_prob(m, {"bad", 0}).probability, 1.0);
  m.add_label(0, "bad");
  EXPECT_EQ(min_safety_prob(m, {"bad", 0}).probability, 0.0);
}

TEST(MinSafety, IteratesAreMonotone)
{
  std::mt19937_64 g(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Pa m = random_cyclic(g, 8);
    std::vector<double> trace;
    ViOptions opt;
    opt.trace = &trace;
    min_safety_prob(m, kBad, opt);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      EXPECT_LE(trace[i], trace[i - 1] + 1e-15);
    }
  }
}

TEST(MinSafety, IterationCapRaisesNonConvergence)
{
  Pa m;
  m.add_state("a");
  m.add_state("boom", {"bad"});
  m.add_state("ok");
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution{{{0, 0.999}, {1, 0.0005}, {2, 0.0005}}});
  ViOptions opt;
  opt.max_iterations = 5;
  EXPECT_THROW(min_safety_prob(m, kBad, opt), NonConvergence);
  // Stopping at residual r leaves an error of up to r / (1 - 0.999).
  EXPECT_NEAR(min_safety_prob(m, kBad).probability, 0.5, 1e-6);
}

TEST(AbsorbBad, RewriteIsWarnedAndHarmless)
{
  Pa m = choice_of(0.4, 0.1);
  const SafetyProperty psi = kBad;
  const double before = min_safety_prob(m, psi).probability;
  m.add_transition(1, m.intern_action("leak", ActionOrigin::kInternal), Distribution::dirac(2));
  std::vector<std::string> w;
  const Pa fixed = absorb_bad_states(m, psi, &w);
  EXPECT_EQ(w.size(), 1u);
  EXPECT_TRUE(fixed.is_terminal(1));
  const auto r = min_safety_prob(m, psi);
  EXPECT_NEAR(r.probability, before, 1e-12);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(ProbUnderScheduler, TwoSurvivalSteps)
{
  Pa m;
  m.add_state("a");
  m.add_state("b");
  m.add_state("end");
  m.add_state("boom", {"bad"});
  const auto go = m.intern_action("go", ActionOrigin::kInternal);
  m.add_transition(0, go, Distribution{{{1, 0.9}, {3, 0.1}}});
  m.add_transition(1, go, Distribution{{{2, 0.9}, {3, 0.1}}});
  EXPECT_NEAR(prob_under_scheduler(m, enumerate_schedulers(m).front(), kBad), 0.81, 1e-15);
}

TEST(ProbUnderScheduler, AgreesWithMonteCarlo)
{
  Pa m;
  m.add_state("a");
  m.add_state("b");
  m.add_state("end");
  m.add_state("boom", {"bad"});
  const auto go = m.intern_action("go", ActionOrigin::kInternal);
  m.add_transition(0, go, Distribution{{{1, 0.6}, {0, 0.2}, {3, 0.2}}});
  m.add_transition(1, go, Distribution{{{2, 0.7}, {0, 0.2}, {3, 0.1}}});
  const Scheduler sigma = enumerate_schedulers(m).front();
  const double p = prob_under_scheduler(m, sigma, kBad);
  const Dtmc d = apply_scheduler(m, sigma);
  CounterRng rng(4);
  std::uint64_t ok = 0;
  const std::uint64_t n = 100000;
  for (std::uint64_t i = 0; i < n; ++i) {
    const Path path = sample_path(d, 10000, [&] { return rng.next_double(); });
    bool hit = false;
    for (const auto & st : path) {
      hit = hit || m.has_label(st.state, "bad");
    }
    ok += hit ? 0 : 1;
  }
  EXPECT_TRUE(oracle::within_three_sigma(ok, n, p)) << ok << " vs " << p;
}

TEST(MinSchedulers, DeterministicAndSymmetric)
{
  Pa m;
  m.add_state("a");
  m.add_state("b");
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution::dirac(1));
  EXPECT_EQ(min_schedulers(m, kBad).size(), 1u);
  EXPECT_EQ(min_schedulers(choice_of(0.3, 0.3), kBad).size(), 2u);
  EXPECT_EQ(min_schedulers(choice_of(0.3, 0.6), kBad).size(), 1u);
}

TEST(MinSchedulers, AttainValueIterationMinimum)
{
  std::mt19937_64 g(21);
  for (int trial = 0; trial < 40; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {6, 3, 0.3, 0.5});
    const double lo = min_safety_prob(m, kBad).probability;
    const auto mins = min_schedulers(m, kBad);
    ASSERT_FALSE(mins.empty());
    for (const auto & s : mins) {
      EXPECT_NEAR(prob_under_scheduler(m, s, kBad), lo, 1e-9);
    }
  }
}

TEST(Decomposition, TrivialCases)
{
  Pa m = choice_of(0.3, 0.6);
  m.add_state("island");
  const Scheduler sigma = enumerate_schedulers(m).front();
  EXPECT_LT(decomposition_check(m, sigma, kBad, 3), 1e-15);
  const auto t = decomposition_terms(m, sigma, kBad, 0);
  EXPECT_DOUBLE_EQ(t.reach, 1.0);
  EXPECT_DOUBLE_EQ(t.safe_avoiding, 0.0);
  EXPECT_LT(t.residual, 1e-15);
}

TEST(Decomposition, RandomAcyclicChainsAgainstPathSums)
{
  std::mt19937_64 g(1234);
  int checked = 0;
  while (checked < 100) {
    const Pa m = oracle::random_acyclic_pa(g, {12, 2, 0.2, 0.3});
    const Scheduler sigma = enumerate_schedulers(m, 1u << 20).front();
    const StateId s = static_cast<StateId>(1 + g() % 11);
    const auto t = decomposition_terms(m, sigma, kBad, s);
    const auto split = oracle::path_sum_split(m, sigma, "bad", s);
    EXPECT_NEAR(t.safe_avoiding, split.safe_avoiding, 1e-12);
    EXPECT_NEAR(t.reach, split.reach, 1e-12);
    EXPECT_NEAR(t.total, oracle::path_sum_safety(m, sigma, "bad", std::nullopt, m.initial()), 1e-12);
    EXPECT_LT(t.residual, 1e-10);
    ++checked;
  }
}

TEST(Decomposition, RejectsCyclicChainsAndBoundedProperties)
{
  Pa m;
  m.add_state("a");
  m.add_state("b");
  const auto go = m.intern_action("go", ActionOrigin::kInternal);
  m.add_transition(0, go, Distribution{{{0, 0.5}, {1, 0.5}}});
  const Scheduler sigma = enumerate_schedulers(m).front();
  EXPECT_THROW(decomposition_check(m, sigma, kBad, 1), std::invalid_argument);
  EXPECT_THROW(decomposition_check(choice_of(0.1, 0.2), enumerate_schedulers(choice_of(0.1, 0.2)).front(), {"bad", 3}, 1), std::invalid_argument);
}

TEST(Bounds, SchedulerValuesLieBetweenMinAndMax)
{
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Pa m = random_cyclic(g, 7);
    if (count_schedulers(m) > 2000) {
      continue;
    }
    const double lo = min_safety_prob(m, kBad).probability;
    const double hi = max_safety_prob(m, kBad).probability;
    for (const auto & s : enumerate_schedulers(m)) {
      const double p = prob_under_scheduler(m, s, kBad);
      EXPECT_GE(p, lo - 1e-9);
      EXPECT_LE(p, hi + 1e-9);
    }
  }
}
