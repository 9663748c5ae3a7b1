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

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"

namespace mosprob
{

enum class Relation { kSaferOrEqual, kWorse, kIncomparable };

const char * to_string(Relation r);

enum class KeyDirection { kHigherSafer, kLowerSafer, kTowardMiddle, kAwayFromMiddle };

/// One monotone rule over a named state feature. Toward-middle uses the two
/// half-range branches: a is safer when b >= a >= middle or b <= a <= middle.
struct KeyTerm
{
  std::string feature;
  KeyDirection direction = KeyDirection::kHigherSafer;
  double middle = 0.0;
};

/// Comparator over state features. Key orders relate two states only when all
/// non-key features are equal and every key agrees on the direction.
class PartialOrder
{
public:
  using Comparator = std::function<Relation(const Pa &, StateId, StateId)>;

  PartialOrder() = default;
  PartialOrder(std::string name, Comparator cmp);
  static PartialOrder on_keys(std::string name, std::vector<KeyTerm> terms);

  [[nodiscard]] Relation compare(const Pa & m, StateId a, StateId b) const;
  [[nodiscard]] bool safer_or_equal(const Pa & m, StateId a, StateId b) const
  {
    return compare(m, a, b) == Relation::kSaferOrEqual;
  }
  [[nodiscard]] const std::string & name() const { return name_; }
  [[nodiscard]] const std::vector<KeyTerm> & terms() const { return terms_; }
  [[nodiscard]] bool is_key_order() const { return !terms_.empty(); }

private:
  std::string name_;
  Comparator cmp_;
  std::vector<KeyTerm> terms_;
};

/// Relation of a single key term on two feature values (kSaferOrEqual when equal).
Relation compare_key(const KeyTerm & term, double a, double b);

PartialOrder negate(const PartialOrder & order);
/// Product of two orders. For key orders the terms are merged; otherwise both
/// comparators must agree.
PartialOrder conjoin(const PartialOrder & a, const PartialOrder & b, std::string name = {});

struct TrimmedPair
{
  StateId source = 0;
  ActionId removed_action = kNoAction;
  StateId removed_dest = 0;
  StateId kept_dest = 0;
};

struct TrimmedState
{
  StateId state = 0;
  std::size_t actions_before = 0;
  std::size_t actions_after = 0;
  /// Surviving action for LSS trimming; kNoAction for PMC trimming.
  ActionId kept_action = kNoAction;
};

struct TrimReport
{
  std::vector<TrimmedPair> pairs;
  std::vector<TrimmedState> states;
  std::size_t transitions_removed = 0;
};

using TrimOutput = std::pair<Pa, TrimReport>;

TrimOutput trim_pmc_state(const Pa & m, StateId s, const PartialOrder & order);
TrimOutput trim_pmc(const Pa & m, const PartialOrder & order);
TrimOutput trim_lss_state(const Pa & m, StateId s, const PartialOrder & order);
TrimOutput trim_lss(const Pa & m, const PartialOrder & order);

/// Distinct (safer, kept) destination pairs of a report, in report order.
std::vector<std::pair<StateId, StateId>> trimmed_pairs(const TrimReport & report);

struct MosValidationRow
{
  StateId s1 = 0;
  StateId s2 = 0;
  /// Share of all schedulers with Pr_{M(s1)} >= Pr_{M(s2)}.
  double p_all = 0.0;
  /// Same share restricted to the min schedulers of the model.
  double p_min = 0.0;
};

struct MosValidationReport
{
  std::vector<MosValidationRow> rows;
  std::uint64_t scheduler_count = 0;
  std::uint64_t min_scheduler_count = 0;
  double min_probability = 0.0;
};

struct MosValidationOptions
{
  std::uint64_t cap = kDefaultSchedulerCap;
  unsigned jobs = 1;
  double slack = 1e-12;
  double min_tol = 1e-9;
};

MosValidationReport validate_mos(
  const Pa & m, const SafetyProperty & psi, const std::vector<std::pair<StateId, StateId>> & pairs,
  const MosValidationOptions & opt = {});

}  // namespace mosprob
