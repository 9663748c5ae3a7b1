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

#include <boost/math/distributions/chi_squared.hpp>
#include <map>
#include <random>

#include "mosprob/errors.hpp"
#include "mosprob/lss.hpp"
#include "mosprob/mos.hpp"
#include "mosprob/pmc.hpp"
#include "oracles.hpp"

using namespace mosprob;

namespace
{

const SafetyProperty kBad{"bad", std::nullopt};

Pa chain_with_failure(double fail)
{
  Pa m;
  m.add_state("a");
  m.add_state("end");
  m.add_state("boom", {"bad"});
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution{{{1, 1.0 - fail}, {2, fail}}});
  return m;
}

// States 0 and 1 with 2 and 3 choices; 6 schedulers.
Pa six_schedulers()
{
  Pa m;
  m.add_state("x");
  m.add_state("y");
  m.add_state("end");
  for (int i = 0; i < 2; ++i) {
    m.add_transition(0, m.intern_action("x" + std::to_string(i), ActionOrigin::kReachabilityChoice), Distribution::dirac(1));
  }
  for (int i = 0; i < 3; ++i) {
    m.add_transition(1, m.intern_action("y" + std::to_string(i), ActionOrigin::kReachabilityChoice), Distribution::dirac(2));
  }
  return m;
}

}  // namespace

TEST(TracesNeeded, ClosedForm)
{
  EXPECT_EQ(traces_needed(0.05, 0.2), 461u);
  EXPECT_EQ(traces_needed(0.01, 0.05), 18445u);
}

TEST(SampleScheduler, DeterministicPaHasOneScheduler)
{
  const Pa m = chain_with_failure(0.1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(sample_scheduler(m, 7, seed).choice, enumerate_schedulers(m).front().choice);
  }
}

TEST(SampleScheduler, BinaryChoiceIsFair)
{
  Pa m;
  m.add_state("s");
  const auto a = m.intern_action("a", ActionOrigin::kReachabilityChoice);
  m.add_transition(0, a, Distribution::dirac(0));
  m.add_transition(0, m.intern_action("b", ActionOrigin::kReachabilityChoice), Distribution::dirac(0));
  std::uint64_t hits = 0;
  const std::uint64_t n = 10000;
  for (std::uint64_t seed = 1; seed <= n; ++seed) {
    hits += sample_scheduler(m, 3, seed).choice[0] == a ? 1 : 0;
  }
  EXPECT_TRUE(oracle::within_three_sigma(hits, n, 0.5)) << hits;
}

TEST(SampleScheduler, UniformOverSixSchedulers)
{
  const Pa m = six_schedulers();
  std::map<std::vector<ActionId>, std::uint64_t> counts;
  const std::uint64_t n = 60000;
  for (std::uint64_t seed = 1; seed <= n; ++seed) {
    ++counts[sample_scheduler(m, 0, seed).choice];
  }
  ASSERT_EQ(counts.size(), 6u);
  double chi = 0.0;
  for (const auto & [k, c] : counts) {
    EXPECT_TRUE(oracle::within_three_sigma(c, n, 1.0 / 6.0));
    const double e = n / 6.0;
    chi += (c - e) * (c - e) / e;
  }
  const boost::math::chi_squared dist(5);
  EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi)), 0.001);
}

TEST(EstimateProb, AlwaysSafeIsExactlyOne)
{
  Pa safe;
  safe.add_state("a");
  safe.add_state("b");
  safe.add_transition(0, safe.intern_action("go", ActionOrigin::kInternal), Distribution::dirac(1));
  EXPECT_EQ(estimate_prob(safe, enumerate_schedulers(safe).front(), kBad, 0.05, 0.2, 1, 1), 1.0);
}

TEST(EstimateProb, CoverageAgainstExactValue)
{
  const Pa m = chain_with_failure(0.3);
  const Scheduler sigma = enumerate_schedulers(m).front();
  const double exact = prob_under_scheduler(m, sigma, kBad);
  ASSERT_NEAR(exact, 0.7, 1e-15);
  int good = 0;
  for (std::uint64_t rep = 1; rep <= 200; ++rep) {
    const double p = estimate_prob(m, sigma, kBad, 0.05, 0.2, 99, rep);
    good += std::abs(p - exact) <= 0.05 ? 1 : 0;
  }
  EXPECT_GE(good, 160);
}

TEST(EstimateProb, BoundedHorizonCountsSurvivors)
{
  // Loop with 0.5 failure per step; bounded at 1 step the safety is 0.5.
  Pa m;
  m.add_state("a");
  m.add_state("boom", {"bad"});
  m.add_transition(0, m.intern_action("go", ActionOrigin::kInternal), Distribution{{{0, 0.5}, {1, 0.5}}});
  const Scheduler sigma = enumerate_schedulers(m).front();
  const double p = estimate_prob(m, sigma, {"bad", 1}, 0.01, 0.05, 5, 1);
  EXPECT_NEAR(p, 0.5, 0.01);
  EXPECT_THROW(estimate_prob(m, sigma, kBad, 0.05, 0.2, 5, 1, 0), NonConvergence);
}

TEST(LssMin, DeterministicModelAndReplay)
{
  const Pa m = chain_with_failure(0.2);
  LssConfig cfg;
  cfg.n = 5;
  cfg.master_seed = 17;
  const auto r = lss_min(m, kBad, cfg);
  ASSERT_EQ(r.estimates.size(), 5u);
  EXPECT_EQ(r.traces_per_scheduler, 461u);
  EXPECT_EQ(r.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  // Schedulers coincide but trace streams are per seed, so estimates may
  // differ; a replay must be bit-identical.
  const auto again = lss_min(m, kBad, cfg);
  EXPECT_EQ(again.estimates, r.estimates);
  cfg.jobs = 3;
  EXPECT_EQ(lss_min(m, kBad, cfg).estimates, r.estimates);
  cfg.exact = true;
  const auto ex = lss_min(m, kBad, cfg);
  for (double e : ex.estimates) {
    EXPECT_NEAR(e, 0.8, 1e-15);
  }
}

TEST(LssMin, MoreSchedulersNeverRaiseTheMinimum)
{
  std::mt19937_64 g(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {8, 3, 0.3, 0.6});
    LssConfig cfg;
    cfg.master_seed = trial;
    double prev = 2.0;
    for (std::size_t n = 1; n <= 10; ++n) {
      cfg.n = n;
      const double v = lss_min(m, kBad, cfg).minimum;
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(LssMin, ExactModeIsConservativeAndReachesMinimum)
{
  std::mt19937_64 g(61);
  for (int trial = 0; trial < 20; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {7, 3, 0.3, 0.6});
    const auto count = count_schedulers(m).convert_to<std::size_t>();
    if (count > 200) {
      continue;
    }
    const double lo = min_safety_prob(m, kBad).probability;
    LssConfig cfg;
    cfg.exact = true;
    cfg.master_seed = 3;
    cfg.n = 3;
    EXPECT_GE(lss_min(m, kBad, cfg).minimum, lo - 1e-12);
    cfg.n = 40 * count;
    EXPECT_NEAR(lss_min(m, kBad, cfg).minimum, lo, 1e-12);
  }
}

TEST(LssMin, RejectsBadConfig)
{
  const Pa m = chain_with_failure(0.2);
  LssConfig cfg;
  cfg.n = 0;
  EXPECT_THROW(lss_min(m, kBad, cfg), std::invalid_argument);
  cfg.n = 1;
  cfg.epsilon = 1.0;
  EXPECT_THROW(lss_min(m, kBad, cfg), std::invalid_argument);
  cfg.epsilon = 0.1;
  cfg.delta = 0.0;
  EXPECT_THROW(lss_min(m, kBad, cfg), std::invalid_argument);
}

TEST(CoupledLss, NoTrimmingGivesIdenticalResults)
{
  std::mt19937_64 g(8);
  const Pa m = oracle::random_acyclic_pa(g, {8, 3, 0.3, 0.6});
  LssConfig cfg;
  cfg.n = 20;
  const auto r = coupled_lss(m, m, TrimReport{}, kBad, cfg);
  EXPECT_EQ(r.full.estimates, r.trimmed.estimates);
  EXPECT_EQ(r.violations, 0u);
}

TEST(CoupledLss, ProjectionMultiplicity)
{
  // Every scheduler of the trimmed model has prod d_s preimages.
  const Pa m = six_schedulers();
  TrimReport rep;
  rep.states.push_back(TrimmedState{1, 3, 1, *m.find_action("y2")});
  std::map<std::vector<ActionId>, int> images;
  for (const auto & s : enumerate_schedulers(m)) {
    ++images[project_scheduler(s, rep).choice];
  }
  ASSERT_EQ(images.size(), 2u);
  for (const auto & [k, c] : images) {
    EXPECT_EQ(c, 3);
  }
  Pa wrong = m;
  EXPECT_THROW(coupled_lss(m, wrong, rep, kBad, LssConfig{}), std::invalid_argument);
}

TEST(CoupledLss, SampledModeSharesTraceRandomness)
{
  std::mt19937_64 g(90);
  const auto c = oracle::theorem_case(g, false);
  const auto [out, rep] = trim_lss(c.model, c.order);
  LssConfig cfg;
  cfg.n = 30;
  cfg.master_seed = 4;
  const auto r = coupled_lss(c.model, out, rep, kBad, cfg);
  EXPECT_EQ(r.full.estimates.size(), 30u);
  // Schedulers untouched by trimming see identical traces.
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const Scheduler s = sample_scheduler(c.model, cfg.master_seed, i + 1);
    if (project_scheduler(s, rep).choice == s.choice) {
      EXPECT_EQ(r.full.estimates[i], r.trimmed.estimates[i]);
    }
  }
}

TEST(Fsd, Examples)
{
  EXPECT_TRUE(fsd_check({0.3, 0.7}, {0.3, 0.7}).dominates);
  EXPECT_EQ(fsd_check({0.3, 0.7}, {0.3, 0.7}).max_gap, 0.0);
  EXPECT_TRUE(fsd_check({1.0}, {0.0}).dominates);
  EXPECT_FALSE(fsd_check({0.2, 0.9}, {0.5, 0.5}).dominates);
  EXPECT_NEAR(fsd_check({0.2, 0.9}, {0.5, 0.5}).max_gap, 0.5, 1e-15);
  EXPECT_FALSE(fsd_check({0.0}, {1.0}).dominates);
  EXPECT_THROW(fsd_check({}, {1.0}), std::invalid_argument);
}
