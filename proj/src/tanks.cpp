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

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "mosprob/casestudies.hpp"
#include "mosprob/errors.hpp"

namespace mosprob
{

TankErrorModel synthetic_tank_errors()
{
  TankErrorModel e;
  e.ew = 6;
  double total = 0.0;
  for (int x = -e.ew; x <= e.ew; ++x) {
    total += e.ew + 1 - std::abs(x);
  }
  for (int x = -e.ew; x <= e.ew; ++x) {
    e.additive.push_back(0.9 * (e.ew + 1 - std::abs(x)) / total);
  }
  e.empty = 0.04;
  e.full = 0.06;
  return e;
}

void validate_params(const TankParams & p)
{
  if (p.tanks == 0) {
    throw ModelError("need at least one tank");
  }
  if (!(0.0 < p.lower_threshold && p.lower_threshold < p.upper_threshold && p.upper_threshold < p.capacity)) {
    throw ModelError("thresholds must satisfy 0 < LT < UT < TS");
  }
  if (p.error.ew < 0 || p.error.additive.size() != static_cast<std::size_t>(2 * p.error.ew + 1)) {
    throw ModelError("additive error table must have 2 * EW + 1 entries");
  }
  double mass = p.error.empty + p.error.full;
  for (double x : p.error.additive) {
    if (x < 0.0) {
      throw ModelError("error probabilities must be non-negative");
    }
    mass += x;
  }
  if (p.error.empty < 0.0 || p.error.full < 0.0 || std::abs(mass - 1.0) > 1e-9) {
    throw ModelError("error model must sum to 1");
  }
}

TankState tank_step(const TankState & s, std::size_t fill_target, const TankParams & p)
{
  TankState out;
  out.filling = fill_target;
  for (std::size_t i = 0; i < s.levels.size(); ++i) {
    out.levels.push_back(s.levels[i] - p.out + (fill_target == i + 1 ? p.in : 0.0));
  }
  return out;
}

std::size_t tank_control(const std::vector<double> & perceived, std::size_t filling, const TankParams & p)
{
  if (filling > 0 && perceived.at(filling - 1) < p.upper_threshold) {
    return filling;
  }
  std::size_t pick = 0;
  for (std::size_t i = 0; i < perceived.size(); ++i) {
    if (perceived[i] < p.lower_threshold && (pick == 0 || perceived[i] < perceived[pick - 1])) {
      pick = i + 1;
    }
  }
  return pick;
}

ControllerPlantSpec tank_spec(const TankParams & p)
{
  validate_params(p);
  const std::size_t j = p.tanks;
  ControllerPlantSpec spec;
  for (std::size_t i = 0; i < j; ++i) {
    spec.dims.push_back("w" + std::to_string(i + 1));
    spec.ranges.emplace_back(-1e6, 1e6);
  }
  spec.dims.emplace_back("fill");
  spec.ranges.emplace_back(0.0, double(j));
  spec.inputs.emplace_back("none");
  for (std::size_t i = 0; i < j; ++i) {
    spec.inputs.push_back("tank" + std::to_string(i + 1));
  }
  spec.pieces = [p, j](const Box & box, std::size_t k) {
    AffinePiece piece;
    piece.domain = box;
    piece.a.assign(j + 1, std::vector<double>(j + 1, 0.0));
    piece.c.assign(j + 1, 0.0);
    for (std::size_t i = 0; i < j; ++i) {
      piece.a[i][i] = 1.0;
      piece.c[i] = -p.out + (k == i + 1 ? p.in : 0.0);
    }
    piece.c[j] = double(k);
    return std::vector<AffinePiece>{piece};
  };
  spec.step = [p, j](const std::vector<double> & x, std::size_t k) {
    TankState s{std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(j)), static_cast<std::size_t>(x[j])};
    const TankState n = tank_step(s, k, p);
    std::vector<double> out = n.levels;
    out.push_back(double(n.filling));
    return out;
  };
  spec.labels = [j, ts = p.capacity](const Box & box) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto & w = box[i];
      const bool low = w.lo_closed ? w.lo <= 0.0 : w.lo < 0.0;
      const bool high = w.hi_closed ? w.hi >= ts : w.hi > ts;
      if (low || high) {
        return std::vector<std::string>{kUnsafeLabel};
      }
    }
    return std::vector<std::string>{};
  };
  spec.bad_label = kUnsafeLabel;
  spec.horizon = p.horizon;
  return spec;
}

Pa tank_perception(const TankParams & p, const Abstraction & controller)
{
  const std::size_t j = p.tanks;
  Pa m;
  m.set_feature_names({"phase"});
  std::vector<std::vector<ActionId>> by_input(j + 1);
  for (ActionId a = 0; a < controller.pa.actions().size(); ++a) {
    const ActionId id = m.intern_action(controller.pa.action(a).name, ActionOrigin::kReachabilityChoice);
    by_input.at(controller.choices.at(a).input).push_back(id);
  }
  const ActionId sense = m.intern_action("sense", ActionOrigin::kPerceptionInput);

  // Perceived-level outcomes for a true level.
  auto outcomes = [&](double level) {
    std::map<double, double> out;
    for (int e = -p.error.ew; e <= p.error.ew; ++e) {
      const double q = p.error.additive[static_cast<std::size_t>(e + p.error.ew)];
      if (q > 0.0) {
        out[std::clamp(level + e, 0.0, p.capacity)] += q;
      }
    }
    if (p.error.empty > 0.0) {
      out[0.0] += p.error.empty;
    }
    if (p.error.full > 0.0) {
      out[p.capacity] += p.error.full;
    }
    return out;
  };

  using Info = std::vector<double>;
  std::map<Info, StateId> senses;
  std::map<StateId, Info> sense_of;
  constexpr StateId kUnset = std::numeric_limits<StateId>::max();
  std::vector<StateId> reports(j + 1, kUnset);
  std::vector<StateId> todo;
  auto sense_state = [&](const Info & info) {
    auto [it, fresh] = senses.emplace(info, 0);
    if (fresh) {
      std::string name = "sense(";
      for (std::size_t i = 0; i < info.size(); ++i) {
        name += (i ? "," : "") + std::to_string(static_cast<long long>(std::floor(info[i])));
      }
      it->second = m.add_state(name + ")", {}, {0.0});
      sense_of[it->second] = info;
      todo.push_back(it->second);
    }
    return it->second;
  };
  auto report_state = [&](std::size_t k) {
    if (reports[k] == kUnset) {
      reports[k] = m.add_state("report(" + std::to_string(k) + ")", {}, {1.0});
      todo.push_back(reports[k]);
    }
    return reports[k];
  };
  auto info_of = [&](StateId cell_state) { return controller.cells.at(cell_state); };

  m.set_initial(sense_state(info_of(controller.pa.initial())));
  while (!todo.empty()) {
    const StateId s = todo.back();
    todo.pop_back();
    if (auto it = sense_of.find(s); it != sense_of.end()) {
      const Info info = it->second;
      const auto filling = static_cast<std::size_t>(info[j]);
      std::map<std::size_t, double> decision;
      std::vector<std::pair<std::vector<double>, double>> joint{{{}, 1.0}};
      for (std::size_t i = 0; i < j; ++i) {
        std::vector<std::pair<std::vector<double>, double>> next;
        for (const auto & [levels, q] : joint) {
          for (const auto & [seen, r] : outcomes(info[i])) {
            auto l = levels;
            l.push_back(seen);
            next.emplace_back(std::move(l), q * r);
          }
        }
        joint = std::move(next);
      }
      for (const auto & [levels, q] : joint) {
        decision[tank_control(levels, filling, p)] += q;
      }
      Distribution mu;
      for (const auto & [k, q] : decision) {
        mu.support.emplace_back(report_state(k), q);
      }
      m.add_transition(s, sense, std::move(mu));
      continue;
    }
    const auto k = static_cast<std::size_t>(std::find(reports.begin(), reports.end(), s) - reports.begin());
    for (ActionId a : by_input[k]) {
      m.add_transition(s, a, Distribution::dirac(sense_state(info_of(controller.choices[a].dest))));
    }
  }
  return m;
}

CaseModel build_tank_model(const TankParams & p, const IntervalGrid & grid, const TankState & initial)
{
  if (initial.levels.size() != p.tanks) {
    throw ModelError("initial levels must list one value per tank");
  }
  CaseModel out;
  const auto spec = tank_spec(p);
  std::vector<double> x = initial.levels;
  x.push_back(double(initial.filling));
  out.controller = build_interval_abstraction(spec, grid, x);
  out.perception = tank_perception(p, out.controller);
  out.model = close_model(out.perception, out.controller, kUnsafeLabel);
  out.property = SafetyProperty{kUnsafeLabel, std::nullopt};
  out.orders = {level_order(p)};
  return out;
}

PartialOrder level_order(const TankParams & p)
{
  std::vector<KeyTerm> terms;
  for (std::size_t i = 0; i < p.tanks; ++i) {
    terms.push_back({"w" + std::to_string(i + 1), KeyDirection::kTowardMiddle, p.capacity / 2.0});
  }
  return PartialOrder::on_keys("level", terms);
}

}  // namespace mosprob
