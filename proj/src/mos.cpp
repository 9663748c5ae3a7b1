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

#include "mosprob/mos.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>

#include "mosprob/parallel.hpp"

namespace mosprob
{

const char * to_string(Relation r)
{
  switch (r) {
    case Relation::kSaferOrEqual:
      return "safer-or-equal";
    case Relation::kWorse:
      return "worse";
    case Relation::kIncomparable:
      return "incomparable";
  }
  return "incomparable";
}

PartialOrder::PartialOrder(std::string name, Comparator cmp)
: name_(std::move(name)), cmp_(std::move(cmp))
{
}

Relation compare_key(const KeyTerm & term, double a, double b)
{
  if (a == b) {
    return Relation::kSaferOrEqual;
  }
  const double mid = term.middle;
  switch (term.direction) {
    case KeyDirection::kHigherSafer:
      return a > b ? Relation::kSaferOrEqual : Relation::kWorse;
    case KeyDirection::kLowerSafer:
      return a < b ? Relation::kSaferOrEqual : Relation::kWorse;
    case KeyDirection::kTowardMiddle:
    case KeyDirection::kAwayFromMiddle: {
      Relation r = Relation::kIncomparable;
      if ((b >= a && a >= mid) || (b <= a && a <= mid)) {
        r = Relation::kSaferOrEqual;
      } else if ((a >= b && b >= mid) || (a <= b && b <= mid)) {
        r = Relation::kWorse;
      }
      if (term.direction == KeyDirection::kAwayFromMiddle && r != Relation::kIncomparable) {
        r = r == Relation::kSaferOrEqual ? Relation::kWorse : Relation::kSaferOrEqual;
      }
      return r;
    }
  }
  return Relation::kIncomparable;
}

PartialOrder PartialOrder::on_keys(std::string name, std::vector<KeyTerm> terms)
{
  if (terms.empty()) {
    throw std::invalid_argument("key order needs at least one term");
  }
  PartialOrder o;
  o.name_ = std::move(name);
  o.terms_ = terms;
  o.cmp_ = [terms](const Pa & m, StateId a, StateId b) {
    const auto & names = m.feature_names();
    std::vector<const KeyTerm *> key(names.size(), nullptr);
    for (const auto & t : terms) {
      const auto idx = m.feature_index(t.feature);
      if (!idx) {
        throw std::invalid_argument("order refers to undeclared feature " + t.feature);
      }
      key[*idx] = &t;
    }
    const auto & fa = m.features(a);
    const auto & fb = m.features(b);
    bool any_safer = false;
    bool any_worse = false;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (fa[i] == fb[i]) {
        continue;
      }
      if (key[i] == nullptr) {
        return Relation::kIncomparable;
      }
      const Relation r = compare_key(*key[i], fa[i], fb[i]);
      if (r == Relation::kIncomparable) {
        return r;
      }
      (r == Relation::kSaferOrEqual ? any_safer : any_worse) = true;
    }
    if (any_safer && any_worse) {
      return Relation::kIncomparable;
    }
    return any_worse ? Relation::kWorse : Relation::kSaferOrEqual;
  };
  return o;
}

Relation PartialOrder::compare(const Pa & m, StateId a, StateId b) const
{
  if (!cmp_) {
    return a == b ? Relation::kSaferOrEqual : Relation::kIncomparable;
  }
  return cmp_(m, a, b);
}

PartialOrder negate(const PartialOrder & order)
{
  const std::string name = "neg(" + order.name() + ")";
  if (order.is_key_order()) {
    auto terms = order.terms();
    for (auto & t : terms) {
      switch (t.direction) {
        case KeyDirection::kHigherSafer:
          t.direction = KeyDirection::kLowerSafer;
          break;
        case KeyDirection::kLowerSafer:
          t.direction = KeyDirection::kHigherSafer;
          break;
        case KeyDirection::kTowardMiddle:
          t.direction = KeyDirection::kAwayFromMiddle;
          break;
        case KeyDirection::kAwayFromMiddle:
          t.direction = KeyDirection::kTowardMiddle;
          break;
      }
    }
    return PartialOrder::on_keys(name, terms);
  }
  return PartialOrder(
    name, [order](const Pa & m, StateId a, StateId b) { return order.compare(m, b, a); });
}

PartialOrder conjoin(const PartialOrder & a, const PartialOrder & b, std::string name)
{
  if (name.empty()) {
    name = a.name() + "&" + b.name();
  }
  if (a.is_key_order() && b.is_key_order()) {
    auto terms = a.terms();
    for (const auto & t : b.terms()) {
      bool dup = false;
      for (const auto & u : terms) {
        if (u.feature == t.feature) {
          if (u.direction != t.direction || u.middle != t.middle) {
            throw std::invalid_argument("conflicting rules for feature " + t.feature);
          }
          dup = true;
        }
      }
      if (!dup) {
        terms.push_back(t);
      }
    }
    return PartialOrder::on_keys(name, terms);
  }
  return PartialOrder(name, [a, b](const Pa & m, StateId x, StateId y) {
    const Relation ra = a.compare(m, x, y);
    const Relation rb = b.compare(m, x, y);
    return ra == rb ? ra : Relation::kIncomparable;
  });
}

namespace
{

struct Candidate
{
  ActionId action;
  StateId dest;
};

std::vector<Candidate> dirac_choices(const Pa & m, StateId s, bool * all_dirac)
{
  std::vector<Candidate> out;
  bool all = true;
  for (const auto & t : m.transitions(s)) {
    if (t.dist.is_dirac() && m.action(t.action).origin == ActionOrigin::kReachabilityChoice) {
      out.push_back(Candidate{t.action, t.dist.target()});
    } else {
      all = false;
    }
  }
  if (all_dirac != nullptr) {
    *all_dirac = all;
  }
  return out;
}

void pmc_state_inplace(const Pa & src, Pa & out, StateId s, const PartialOrder & order, TrimReport & rep)
{
  auto cand = dirac_choices(src, s, nullptr);
  const std::size_t before = src.transitions(s).size();
  bool removed_any = false;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < cand.size() && !changed; ++i) {
      for (std::size_t j = 0; j < cand.size() && !changed; ++j) {
        const StateId s1 = cand[i].dest;
        const StateId s2 = cand[j].dest;
        if (i == j || s1 == s2) {
          continue;
        }
        if (order.compare(src, s1, s2) != Relation::kSaferOrEqual) {
          continue;
        }
        // Mutually safer-or-equal: keep the smaller destination id.
        if (order.compare(src, s2, s1) == Relation::kSaferOrEqual && s1 < s2) {
          continue;
        }
        rep.pairs.push_back(TrimmedPair{s, cand[i].action, s1, s2});
        out.remove_transition(s, cand[i].action);
        ++rep.transitions_removed;
        cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
        removed_any = true;
        changed = true;
      }
    }
  }
  if (removed_any) {
    rep.states.push_back(TrimmedState{s, before, out.transitions(s).size(), kNoAction});
  }
}

void lss_state_inplace(const Pa & src, Pa & out, StateId s, const PartialOrder & order, TrimReport & rep)
{
  bool all_dirac = false;
  const auto cand = dirac_choices(src, s, &all_dirac);
  if (!all_dirac || cand.size() < 2) {
    return;
  }
  std::size_t best = cand.size();
  for (std::size_t k = 0; k < cand.size(); ++k) {
    bool dominated_by_all = true;
    for (std::size_t i = 0; i < cand.size() && dominated_by_all; ++i) {
      if (i != k && order.compare(src, cand[i].dest, cand[k].dest) != Relation::kSaferOrEqual) {
        dominated_by_all = false;
      }
    }
    if (!dominated_by_all) {
      continue;
    }
    if (best == cand.size() || cand[k].dest < cand[best].dest) {
      best = k;
    }
  }
  if (best == cand.size()) {
    return;
  }
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (i == best) {
      continue;
    }
    rep.pairs.push_back(TrimmedPair{s, cand[i].action, cand[i].dest, cand[best].dest});
    out.remove_transition(s, cand[i].action);
    ++rep.transitions_removed;
  }
  rep.states.push_back(TrimmedState{s, cand.size(), 1, cand[best].action});
}

}  // namespace

TrimOutput trim_pmc_state(const Pa & m, StateId s, const PartialOrder & order)
{
  TrimOutput out{m, {}};
  pmc_state_inplace(m, out.first, s, order, out.second);
  return out;
}

TrimOutput trim_pmc(const Pa & m, const PartialOrder & order)
{
  TrimOutput out{m, {}};
  for (StateId s = 0; s < m.num_states(); ++s) {
    pmc_state_inplace(m, out.first, s, order, out.second);
  }
  return out;
}

TrimOutput trim_lss_state(const Pa & m, StateId s, const PartialOrder & order)
{
  TrimOutput out{m, {}};
  lss_state_inplace(m, out.first, s, order, out.second);
  return out;
}

TrimOutput trim_lss(const Pa & m, const PartialOrder & order)
{
  TrimOutput out{m, {}};
  for (StateId s = 0; s < m.num_states(); ++s) {
    lss_state_inplace(m, out.first, s, order, out.second);
  }
  return out;
}

std::vector<std::pair<StateId, StateId>> trimmed_pairs(const TrimReport & report)
{
  std::vector<std::pair<StateId, StateId>> out;
  std::set<std::pair<StateId, StateId>> seen;
  for (const auto & p : report.pairs) {
    if (seen.insert({p.removed_dest, p.kept_dest}).second) {
      out.emplace_back(p.removed_dest, p.kept_dest);
    }
  }
  return out;
}

MosValidationReport validate_mos(
  const Pa & m, const SafetyProperty & psi, const std::vector<std::pair<StateId, StateId>> & pairs,
  const MosValidationOptions & opt)
{
  SchedulerEnumerator en(m, opt.cap);
  const std::uint64_t total = en.size();

  const auto reach = reachable_states(m);
  for (const auto & [a, b] : pairs) {
    if (a >= m.num_states() || b >= m.num_states() || !reach[a] || !reach[b]) {
      throw std::invalid_argument("validate_mos: pair state is not reachable from the initial state");
    }
  }
  std::vector<StateId> roots{m.initial()};
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (const auto & [a, b] : pairs) {
    auto slot = [&](StateId s) {
      auto it = std::find(roots.begin(), roots.end(), s);
      if (it != roots.end()) {
        return static_cast<std::size_t>(it - roots.begin());
      }
      roots.push_back(s);
      return roots.size() - 1;
    };
    slots.emplace_back(slot(a), slot(b));
  }

  std::vector<double> at_initial(total, 0.0);
  std::vector<std::vector<char>> holds(pairs.size(), std::vector<char>(total, 0));
  parallel_for(total, opt.jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Scheduler sigma = en.at(i);
      const auto v = safety_from_states(m, sigma, psi, roots);
      at_initial[i] = v[0];
      for (std::size_t k = 0; k < slots.size(); ++k) {
        holds[k][i] = v[slots[k].first] >= v[slots[k].second] - opt.slack ? 1 : 0;
      }
    }
  });

  MosValidationReport rep;
  rep.scheduler_count = total;
  rep.min_probability = total == 0 ? 1.0 : *std::min_element(at_initial.begin(), at_initial.end());
  std::vector<char> is_min(total, 0);
  for (std::size_t i = 0; i < total; ++i) {
    if (at_initial[i] <= rep.min_probability + opt.min_tol) {
      is_min[i] = 1;
      ++rep.min_scheduler_count;
    }
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    std::uint64_t all = 0;
    std::uint64_t mins = 0;
    for (std::size_t i = 0; i < total; ++i) {
      all += static_cast<std::uint64_t>(holds[k][i]);
      mins += static_cast<std::uint64_t>(holds[k][i] && is_min[i]);
    }
    MosValidationRow row;
    row.s1 = pairs[k].first;
    row.s2 = pairs[k].second;
    row.p_all = static_cast<double>(all) / static_cast<double>(total);
    row.p_min = static_cast<double>(mins) / static_cast<double>(rep.min_scheduler_count);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace mosprob
