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

#include <random>

#include "mosprob/lss.hpp"
#include "mosprob/mos.hpp"
#include "mosprob/pmc.hpp"
#include "oracles.hpp"

using namespace mosprob;

namespace
{

const SafetyProperty kBad{"bad", std::nullopt};

// Choice state 0 with Dirac branches to states with feature x = xs[i].
Pa fan(const std::vector<double> & xs)
{
  Pa m;
  m.set_feature_names({"x"});
  m.add_state("root", {}, {-1});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    m.add_state("d" + std::to_string(i), {}, {xs[i]});
    m.add_transition(0, m.intern_action("pick" + std::to_string(i), ActionOrigin::kReachabilityChoice), Distribution::dirac(static_cast<StateId>(i + 1)));
  }
  return m;
}

const PartialOrder kHigher = PartialOrder::on_keys("x-up", {{"x", KeyDirection::kHigherSafer, 0}});

bool same_structure(const Pa & a, const Pa & b)
{
  if (a.num_states() != b.num_states() || a.actions().size() != b.actions().size()) {
    return false;
  }
  for (StateId s = 0; s < a.num_states(); ++s) {
    if (a.labels(s) != b.labels(s) || a.features(s) != b.features(s) || a.transitions(s).size() != b.transitions(s).size()) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST(Orders, KeyDirections)
{
  const KeyTerm up{"x", KeyDirection::kHigherSafer, 0};
  const KeyTerm down{"x", KeyDirection::kLowerSafer, 0};
  const KeyTerm mid{"x", KeyDirection::kTowardMiddle, 15};
  EXPECT_EQ(compare_key(up, 3, 2), Relation::kSaferOrEqual);
  EXPECT_EQ(compare_key(up, 2, 3), Relation::kWorse);
  EXPECT_EQ(compare_key(down, 2, 3), Relation::kSaferOrEqual);
  EXPECT_EQ(compare_key(mid, 10, 5), Relation::kSaferOrEqual);
  EXPECT_EQ(compare_key(mid, 20, 25), Relation::kSaferOrEqual);
  EXPECT_EQ(compare_key(mid, 25, 20), Relation::kWorse);
  EXPECT_EQ(compare_key(mid, 10, 20), Relation::kIncomparable);
  EXPECT_EQ(compare_key(mid, 15, 15), Relation::kSaferOrEqual);
}

TEST(Orders, NonKeyFeaturesMustMatch)
{
  Pa m;
  m.set_feature_names({"d", "v", "t"});
  m.add_state("a", {}, {10, 1, 0});
  m.add_state("b", {}, {5, 1, 0});
  m.add_state("c", {}, {10, 2, 0});
  m.add_state("e", {}, {10, 1, 1});
  const auto d = PartialOrder::on_keys("d", {{"d", KeyDirection::kHigherSafer, 0}});
  EXPECT_EQ(d.compare(m, 0, 1), Relation::kSaferOrEqual);
  EXPECT_EQ(d.compare(m, 1, 0), Relation::kWorse);
  EXPECT_EQ(d.compare(m, 0, 2), Relation::kIncomparable);
  EXPECT_EQ(d.compare(m, 0, 3), Relation::kIncomparable);
  const auto dv = conjoin(d, PartialOrder::on_keys("v", {{"v", KeyDirection::kLowerSafer, 0}}));
  EXPECT_EQ(dv.compare(m, 0, 2), Relation::kSaferOrEqual);
  EXPECT_EQ(dv.compare(m, 1, 2), Relation::kIncomparable);
  const auto missing = PartialOrder::on_keys("w", {{"w", KeyDirection::kHigherSafer, 0}});
  EXPECT_THROW(missing.compare(m, 0, 1), std::invalid_argument);
}

TEST(Orders, ConjoinOfComparatorsNeedsAgreement)
{
  const Pa m = fan({1, 2});
  const PartialOrder always("always", [](const Pa &, StateId, StateId) { return Relation::kSaferOrEqual; });
  const auto both = conjoin(kHigher, always);
  EXPECT_FALSE(both.is_key_order());
  EXPECT_EQ(both.compare(m, 2, 1), Relation::kSaferOrEqual);
  EXPECT_EQ(both.compare(m, 1, 2), Relation::kIncomparable);
  EXPECT_THROW(
    conjoin(kHigher, PartialOrder::on_keys("y", {{"x", KeyDirection::kLowerSafer, 0}})), std::invalid_argument);
}

TEST(Orders, NegateIsInvolutionAndKeepsIncomparable)
{
  std::mt19937_64 g(4);
  Pa m;
  m.set_feature_names({"a", "b"});
  std::uniform_int_distribution<int> v(0, 4);
  for (int i = 0; i < 60; ++i) {
    m.add_state("s" + std::to_string(i), {}, {double(v(g)), double(v(g))});
  }
  const auto o = conjoin(
    PartialOrder::on_keys("a", {{"a", KeyDirection::kHigherSafer, 0}}),
    PartialOrder::on_keys("b", {{"b", KeyDirection::kTowardMiddle, 2}}));
  const PartialOrder generic("g", [&o](const Pa & mm, StateId x, StateId y) { return o.compare(mm, x, y); });
  for (const auto * base : {&o, &generic}) {
    const auto n1 = negate(*base);
    const auto n2 = negate(n1);
    for (StateId a = 0; a < m.num_states(); ++a) {
      for (StateId b = 0; b < m.num_states(); ++b) {
        const auto r = base->compare(m, a, b);
        EXPECT_EQ(n2.compare(m, a, b), r);
        if (r == Relation::kIncomparable) {
          EXPECT_EQ(n1.compare(m, a, b), r);
        }
        if (a != b && m.features(a) != m.features(b) && r == Relation::kSaferOrEqual) {
          EXPECT_EQ(n1.compare(m, a, b), Relation::kWorse);
        }
      }
    }
  }
}

TEST(Orders, TransitiveOnRandomTriples)
{
  std::mt19937_64 g(99);
  std::uniform_int_distribution<int> v(0, 6);
  Pa m;
  m.set_feature_names({"d", "v", "w"});
  for (int i = 0; i < 3 * 10000; ++i) {
    m.add_state("s", {}, {double(v(g)), double(v(g) % 2), double(v(g))});
  }
  const std::vector<PartialOrder> orders{
    PartialOrder::on_keys("d", {{"d", KeyDirection::kHigherSafer, 0}}),
    PartialOrder::on_keys("v", {{"v", KeyDirection::kLowerSafer, 0}}),
    PartialOrder::on_keys("dv", {{"d", KeyDirection::kHigherSafer, 0}, {"v", KeyDirection::kLowerSafer, 0}}),
    PartialOrder::on_keys("w", {{"w", KeyDirection::kTowardMiddle, 3}}),
    negate(PartialOrder::on_keys("w", {{"w", KeyDirection::kTowardMiddle, 3}}))};
  for (const auto & o : orders) {
    for (StateId i = 0; i < m.num_states(); i += 3) {
      const bool ab = o.safer_or_equal(m, i, i + 1);
      const bool bc = o.safer_or_equal(m, i + 1, i + 2);
      if (ab && bc) {
        EXPECT_TRUE(o.safer_or_equal(m, i, i + 2)) << o.name();
      }
      EXPECT_TRUE(o.safer_or_equal(m, i, i));
    }
  }
}

TEST(TrimPmc, IncomparableIsIdentity)
{
  const Pa m = fan({1, 2});
  const PartialOrder none("none", [](const Pa &, StateId a, StateId b) {
    return a == b ? Relation::kSaferOrEqual : Relation::kIncomparable;
  });
  const auto [out, rep] = trim_pmc_state(m, 0, none);
  EXPECT_EQ(out.num_transitions(), 2u);
  EXPECT_TRUE(rep.pairs.empty());
  EXPECT_EQ(trim_pmc(m, none).second.transitions_removed, 0u);
}

TEST(TrimPmc, SaferBranchIsRemoved)
{
  const Pa m = fan({1, 2});
  const auto [out, rep] = trim_pmc_state(m, 0, kHigher);
  ASSERT_EQ(out.transitions(0).size(), 1u);
  EXPECT_EQ(out.transitions(0).front().dist.target(), 1u);
  ASSERT_EQ(rep.pairs.size(), 1u);
  EXPECT_EQ(rep.pairs[0].removed_dest, 2u);
  EXPECT_EQ(rep.pairs[0].kept_dest, 1u);
  EXPECT_EQ(trimmed_pairs(rep), (std::vector<std::pair<StateId, StateId>>{{2, 1}}));
}

TEST(TrimPmc, TiesKeepSmallestDestination)
{
  const Pa m = fan({3, 3, 3});
  const auto [out, rep] = trim_pmc(m, kHigher);
  ASSERT_EQ(out.transitions(0).size(), 1u);
  EXPECT_EQ(out.transitions(0).front().dist.target(), 1u);
  const auto [out2, rep2] = trim_lss(m, kHigher);
  ASSERT_EQ(out2.transitions(0).size(), 1u);
  EXPECT_EQ(out2.transitions(0).front().dist.target(), 1u);
}

TEST(TrimPmc, ProbabilisticTransitionsAreUntouched)
{
  Pa m = fan({1, 2});
  m.add_transition(0, m.intern_action("coin", ActionOrigin::kInternal), Distribution{{{1, 0.5}, {2, 0.5}}});
  m.add_transition(0, m.intern_action("look", ActionOrigin::kPerceptionInput), Distribution::dirac(2));
  const auto [out, rep] = trim_pmc(m, kHigher);
  EXPECT_EQ(out.transitions(0).size(), 3u);
  EXPECT_TRUE(out.find_transition(0, *m.find_action("coin")) != nullptr);
  EXPECT_TRUE(out.find_transition(0, *m.find_action("look")) != nullptr);
  // LSS trimming needs every transition to be a Dirac choice.
  EXPECT_EQ(trim_lss(m, kHigher).second.transitions_removed, 0u);
}

TEST(TrimPmc, DominatedChainShrinksSchedulers)
{
  Pa m;
  m.set_feature_names({"x"});
  const int n = 5;
  for (int i = 0; i <= 2 * n; ++i) {
    m.add_state("s" + std::to_string(i), {}, {double(i % 2), double(i)});
  }
  m.set_feature_names({"x", "pos"});
  // Each even state chooses between an odd sibling (x=1) and the next even state (x=0).
  for (int i = 0; i < 2 * n; i += 2) {
    m.add_transition(i, m.intern_action("up" + std::to_string(i), ActionOrigin::kReachabilityChoice), Distribution::dirac(i + 1));
    m.add_transition(i, m.intern_action("on" + std::to_string(i), ActionOrigin::kReachabilityChoice), Distribution::dirac(i + 2));
  }
  const PartialOrder odd("odd", [](const Pa & mm, StateId a, StateId b) {
    if (a == b) {
      return Relation::kSaferOrEqual;
    }
    const double xa = mm.features(a)[0];
    const double xb = mm.features(b)[0];
    if (xa > xb) {
      return Relation::kSaferOrEqual;
    }
    return xa < xb ? Relation::kWorse : Relation::kIncomparable;
  });
  const auto [out, rep] = trim_pmc(m, odd);
  EXPECT_EQ(rep.transitions_removed, static_cast<std::size_t>(n));
  EXPECT_LT(count_schedulers(out), count_schedulers(m));
  EXPECT_EQ(count_schedulers(out), 1);
}

TEST(TrimPmc, OnlyRemovesAndIsIdempotent)
{
  std::mt19937_64 g(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = oracle::theorem_case(g, true);
    const auto [out, rep] = trim_pmc(c.model, c.order);
    ASSERT_EQ(out.num_states(), c.model.num_states());
    for (StateId s = 0; s < out.num_states(); ++s) {
      EXPECT_EQ(out.labels(s), c.model.labels(s));
      EXPECT_FALSE(out.transitions(s).empty() && !c.model.transitions(s).empty());
      for (const auto & t : out.transitions(s)) {
        const auto * orig = c.model.find_transition(s, t.action);
        ASSERT_NE(orig, nullptr);
        EXPECT_EQ(orig->dist.support, t.dist.support);
      }
    }
    for (const auto & p : rep.pairs) {
      EXPECT_NE(c.model.find_transition(p.source, p.removed_action), nullptr);
      EXPECT_EQ(out.find_transition(p.source, p.removed_action), nullptr);
    }
    EXPECT_EQ(out.num_transitions() + rep.transitions_removed, c.model.num_transitions());
    const auto [again, rep2] = trim_pmc(out, c.order);
    EXPECT_EQ(rep2.transitions_removed, 0u);
    EXPECT_TRUE(same_structure(again, out));
  }
}

TEST(TrimPmc, PreservesMinimumUnderVerifiedOrders)
{
  std::mt19937_64 g(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = oracle::theorem_case(g, true);
    const auto [out, rep] = trim_pmc(c.model, c.order);
    EXPECT_GT(rep.transitions_removed, 0u);
    EXPECT_NEAR(min_safety_prob(out, kBad).probability, min_safety_prob(c.model, kBad).probability, 1e-9);
  }
}

TEST(TrimPmc, FixpointDoesNotDependOnPairOrder)
{
  // Same fan, destinations listed in two different orders.
  const Pa a = fan({1, 4, 2, 3});
  const Pa b = fan({3, 2, 4, 1});
  const auto ta = trim_pmc(a, kHigher).first;
  const auto tb = trim_pmc(b, kHigher).first;
  ASSERT_EQ(ta.transitions(0).size(), 1u);
  ASSERT_EQ(tb.transitions(0).size(), 1u);
  EXPECT_EQ(ta.features(ta.transitions(0)[0].dist.target()), tb.features(tb.transitions(0)[0].dist.target()));
}

TEST(TrimLss, SingleBranchIsIdentity)
{
  const Pa m = fan({1});
  EXPECT_EQ(trim_lss_state(m, 0, kHigher).second.transitions_removed, 0u);
}

TEST(TrimLss, TotalOrderKeepsWorstOnly)
{
  const Pa m = fan({5, 1, 3, 4});
  const auto [out, rep] = trim_lss(m, kHigher);
  ASSERT_EQ(out.transitions(0).size(), 1u);
  EXPECT_EQ(out.transitions(0).front().dist.target(), 2u);
  ASSERT_EQ(rep.states.size(), 1u);
  EXPECT_EQ(rep.states[0].actions_before, 4u);
  EXPECT_EQ(rep.states[0].actions_after, 1u);
  EXPECT_EQ(rep.states[0].kept_action, *m.find_action("pick1"));
  EXPECT_EQ(count_schedulers(out), 1);
}

TEST(TrimLss, NoCommonMinimumIsIdentity)
{
  Pa m;
  m.set_feature_names({"x", "y"});
  m.add_state("r", {}, {0, 0});
  m.add_state("a", {}, {1, 0});
  m.add_state("b", {}, {0, 1});
  m.add_transition(0, m.intern_action("a", ActionOrigin::kReachabilityChoice), Distribution::dirac(1));
  m.add_transition(0, m.intern_action("b", ActionOrigin::kReachabilityChoice), Distribution::dirac(2));
  const auto xy = PartialOrder::on_keys("xy", {{"x", KeyDirection::kHigherSafer, 0}, {"y", KeyDirection::kHigherSafer, 0}});
  EXPECT_EQ(trim_lss(m, xy).second.transitions_removed, 0u);
}

TEST(TrimLss, MatchesPmcOnTwoOrderedBranches)
{
  Pa m;
  m.set_feature_names({"x"});
  for (int i = 0; i < 7; ++i) {
    m.add_state("s" + std::to_string(i), {}, {double(i)});
  }
  for (StateId s = 0; s < 3; ++s) {
    m.add_transition(s, m.intern_action("l" + std::to_string(s), ActionOrigin::kReachabilityChoice), Distribution::dirac(2 * s + 1));
    m.add_transition(s, m.intern_action("r" + std::to_string(s), ActionOrigin::kReachabilityChoice), Distribution::dirac(2 * s + 2));
  }
  const auto p = trim_pmc(m, kHigher);
  const auto l = trim_lss(m, kHigher);
  for (StateId s = 0; s < m.num_states(); ++s) {
    ASSERT_EQ(p.first.transitions(s).size(), l.first.transitions(s).size());
    for (std::size_t i = 0; i < p.first.transitions(s).size(); ++i) {
      EXPECT_EQ(p.first.transitions(s)[i].action, l.first.transitions(s)[i].action);
    }
  }
}

TEST(TrimLss, SchedulerCountLawOverUntrimmedDomain)
{
  std::mt19937_64 g(55);
  for (int trial = 0; trial < 60; ++trial) {
    const auto c = oracle::theorem_case(g, false);
    const auto [out, rep] = trim_lss(c.model, c.order);
    BigCount factor = 1;
    for (const auto & t : rep.states) {
      if (reachable_states(c.model)[t.state]) {
        factor *= static_cast<unsigned>(t.actions_before);
      }
    }
    EXPECT_EQ(count_schedulers(c.model), factor * count_schedulers_over(out, reachable_states(c.model)));
  }
}

TEST(TrimLss, CoupledDominanceUnderVerifiedOrders)
{
  std::mt19937_64 g(808);
  for (int trial = 0; trial < 30; ++trial) {
    const auto c = oracle::theorem_case(g, false);
    const auto [out, rep] = trim_lss(c.model, c.order);
    LssConfig cfg;
    cfg.n = 100;
    cfg.exact = true;
    cfg.master_seed = 1000 + trial;
    const auto res = coupled_lss(c.model, out, rep, kBad, cfg);
    EXPECT_EQ(res.violations, 0u);
    EXPECT_TRUE(fsd_check(res.full.estimates, res.trimmed.estimates).dominates);
  }
}

TEST(ValidateMos, TrivialPairs)
{
  Pa m;
  m.add_state("root");
  m.add_state("safe");
  m.add_state("risky");
  m.add_state("boom", {"bad"});
  m.add_state("end");
  m.add_transition(0, m.intern_action("a", ActionOrigin::kReachabilityChoice), Distribution::dirac(1));
  m.add_transition(0, m.intern_action("b", ActionOrigin::kReachabilityChoice), Distribution::dirac(2));
  m.add_transition(1, m.intern_action("c", ActionOrigin::kReachabilityChoice), Distribution::dirac(4));
  m.add_transition(1, m.intern_action("d", ActionOrigin::kReachabilityChoice), Distribution::dirac(4));
  m.add_transition(2, m.intern_action("e", ActionOrigin::kInternal), Distribution{{{3, 0.1}, {4, 0.9}}});
  const auto rep = validate_mos(m, kBad, {{1, 1}, {1, 2}, {2, 1}});
  EXPECT_EQ(rep.scheduler_count, 4u);
  EXPECT_EQ(rep.rows[0].p_all, 1.0);
  EXPECT_EQ(rep.rows[1].p_all, 1.0);
  EXPECT_EQ(rep.rows[2].p_all, 0.0);
  EXPECT_EQ(rep.min_scheduler_count, 2u);
  EXPECT_EQ(rep.rows[1].p_min, 1.0);
  EXPECT_NEAR(rep.min_probability, 0.9, 1e-12);
}

TEST(ValidateMos, ParallelMatchesSerialAndOracle)
{
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Pa m = oracle::random_acyclic_pa(g, {8, 3, 0.3, 0.6});
    const auto scheds = enumerate_schedulers(m);
    if (scheds.size() > 1000) {
      continue;
    }
    const auto reach = reachable_states(m);
    std::vector<std::pair<StateId, StateId>> pairs;
    for (StateId a = 0; a < m.num_states(); ++a) {
      for (StateId b = a + 1; b < m.num_states(); ++b) {
        if (reach[a] && reach[b]) {
          pairs.emplace_back(b, a);
        }
      }
    }
    EXPECT_THROW(validate_mos(m, kBad, {{0, 99}}), std::invalid_argument);
    MosValidationOptions serial;
    MosValidationOptions par;
    par.jobs = 3;
    const auto r1 = validate_mos(m, kBad, pairs, serial);
    const auto r2 = validate_mos(m, kBad, pairs, par);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      EXPECT_EQ(r1.rows[k].p_all, r2.rows[k].p_all);
      EXPECT_EQ(r1.rows[k].p_min, r2.rows[k].p_min);
      // Oracle: count over the independent enumeration.
      std::size_t ok = 0;
      for (const auto & s : scheds) {
        const auto v = oracle::gauss_safety(m, s, "bad");
        ok += v[pairs[k].first] >= v[pairs[k].second] - 1e-12 ? 1 : 0;
      }
      EXPECT_DOUBLE_EQ(r1.rows[k].p_all, double(ok) / double(scheds.size()));
    }
  }
}
