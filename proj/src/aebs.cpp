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
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>

#include "mosprob/casestudies.hpp"
#include "mosprob/errors.hpp"

namespace mosprob
{

namespace
{

constexpr std::size_t kNoDetect = 0;
constexpr std::size_t kDetect = 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

Interval intersect(const Interval & a, const Interval & b)
{
  Interval out;
  if (a.lo > b.lo) {
    out.lo = a.lo;
    out.lo_closed = a.lo_closed;
  } else if (b.lo > a.lo) {
    out.lo = b.lo;
    out.lo_closed = b.lo_closed;
  } else {
    out.lo = a.lo;
    out.lo_closed = a.lo_closed && b.lo_closed;
  }
  if (a.hi < b.hi) {
    out.hi = a.hi;
    out.hi_closed = a.hi_closed;
  } else if (b.hi < a.hi) {
    out.hi = b.hi;
    out.hi_closed = b.hi_closed;
  } else {
    out.hi = a.hi;
    out.hi_closed = a.hi_closed && b.hi_closed;
  }
  return out;
}

// d' = d - tau v, v' = max(0, v - tau b), split where the clamp engages.
void add_braking(std::vector<AffinePiece> & out, const Box & dom, double b, double tau)
{
  if (b <= 0.0) {
    out.push_back({dom, {{1.0, -tau}, {0.0, 1.0}}, {0.0, 0.0}});
    return;
  }
  const double cut = tau * b;
  Box low = dom;
  low[1] = intersect(dom[1], Interval{-kInf, cut, true, true});
  if (!low[1].empty()) {
    out.push_back({low, {{1.0, -tau}, {0.0, 0.0}}, {0.0, 0.0}});
  }
  Box high = dom;
  high[1] = intersect(dom[1], Interval{cut, kInf, false, true});
  if (!high[1].empty()) {
    out.push_back({high, {{1.0, -tau}, {0.0, 1.0}}, {0.0, -cut}});
  }
}

using Curve = std::function<double(double)>;

// Smallest v in [a, b] with f(v) >= y for increasing f, rounded down.
double first_at_least(const Curve & f, double y, double a, double b)
{
  for (int i = 0; i < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++i) {
    const double mid = 0.5 * (a + b);
    (f(mid) >= y ? b : a) = mid;
  }
  return a;
}

// Largest v in [a, b] with f(v) < y for increasing f, rounded up.
double last_below(const Curve & f, double y, double a, double b)
{
  for (int i = 0; i < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++i) {
    const double mid = 0.5 * (a + b);
    (f(mid) < y ? a : b) = mid;
  }
  return b;
}

// Bounding box of dom restricted to {lower(v) < d <= upper(v)} for
// increasing curves. Bounds coming from the curves are taken closed.
std::optional<Box> region_box(const Box & dom, const Curve & lower, const Curve & upper)
{
  const Interval & d = dom[0];
  const Interval & v = dom[1];
  double vlo = v.lo;
  double vhi = v.hi;
  bool vlo_closed = v.lo_closed;
  bool vhi_closed = v.hi_closed;
  if (upper(vhi) < d.lo || lower(vlo) >= d.hi) {
    return std::nullopt;
  }
  if (upper(vlo) < d.lo) {
    vlo = first_at_least(upper, d.lo, vlo, vhi);
    vlo_closed = true;
  }
  if (lower(vhi) >= d.hi) {
    vhi = last_below(lower, d.hi, vlo, vhi);
    vhi_closed = true;
  }
  Interval dv{d.lo, d.hi, d.lo_closed, d.hi_closed};
  const double m = lower(vlo);
  if (m > dv.lo) {
    dv.lo = m;
    dv.lo_closed = true;
  }
  const double top = upper(vhi);
  if (top < dv.hi) {
    dv.hi = top;
    dv.hi_closed = true;
  }
  Box out{dv, Interval{vlo, vhi, vlo_closed, vhi_closed}};
  if (out[0].empty() || out[1].empty()) {
    return std::nullopt;
  }
  return out;
}

std::vector<AffinePiece> aebs_pieces(const AebsParams & p, const Box & box, std::size_t k)
{
  std::vector<AffinePiece> out;
  if (k == kNoDetect) {
    add_braking(out, box, 0.0, p.tau);
    return out;
  }
  if (box[0].is_point() && box[1].is_point()) {
    add_braking(out, box, aebs_control(box[0].lo, box[1].lo, true, p), p.tau);
    return out;
  }
  if (!p.distance_schedule.empty()) {
    double prev = -kInf;
    for (const auto & step : p.distance_schedule) {
      Box sub = box;
      sub[0] = intersect(box[0], Interval{prev, step.up_to, false, true});
      prev = step.up_to;
      if (!sub[0].empty()) {
        add_braking(out, sub, step.power, p.tau);
      }
    }
    Box rest = box;
    rest[0] = intersect(box[0], Interval{prev, kInf, false, true});
    if (!rest[0].empty()) {
      add_braking(out, rest, 0.0, p.tau);
    }
    return out;
  }
  const double slope = p.c1 * p.t_h + p.t_s;
  const Curve ttc = [c2 = p.c2](double v) { return c2 * v; };
  const Curve wi = [slope, q = p.u / (2.0 * p.b2)](double v) { return slope * v + q * v * v; };
  const Curve lo = [&](double v) { return std::min(ttc(v), wi(v)); };
  const Curve hi = [&](double v) { return std::max(ttc(v), wi(v)); };
  const Curve none = [](double) { return -kInf; };
  const Curve all = [](double) { return kInf; };
  const std::vector<std::pair<std::pair<Curve, Curve>, double>> regions{
    {{none, lo}, p.b2}, {{lo, hi}, p.b1}, {{hi, all}, 0.0}};
  for (const auto & [curves, power] : regions) {
    if (auto sub = region_box(box, curves.first, curves.second)) {
      add_braking(out, *sub, power, p.tau);
    }
  }
  return out;
}

}  // namespace

void validate_params(const AebsParams & p)
{
  if (!(p.tau > 0.0)) {
    throw ModelError("tau must be positive");
  }
  if (p.distance_schedule.empty() && !(0.0 < p.b1 && p.b1 < p.b2)) {
    throw ModelError("braking powers must satisfy 0 < B1 < B2");
  }
  if (p.distance_schedule.empty() && p.c1 * p.t_h + p.t_s < 0.0) {
    throw ModelError("C1 * T_h + T_s must be non-negative");
  }
  if (p.n_f == 0) {
    throw ModelError("filter window must be at least 1");
  }
  if (std::max(p.w, p.n_f) > 16) {
    throw ModelError("detection history longer than 16 readings is not supported");
  }
  if (!(p.detection.bin_width > 0.0)) {
    throw ModelError("detection bin width must be positive");
  }
  for (double x : p.detection.by_bin) {
    if (x < 0.0 || x > 1.0) {
      throw ModelError("detection probabilities must lie in [0, 1]");
    }
  }
  if (p.detection.beyond < 0.0 || p.detection.beyond > 1.0) {
    throw ModelError("detection probabilities must lie in [0, 1]");
  }
}

AebsState aebs_step(const AebsState & s, double b, double tau)
{
  return AebsState{s.d - tau * s.v, std::max(0.0, s.v - tau * b)};
}

double aebs_control(double d, double v, bool detected, const AebsParams & p)
{
  if (!detected || v <= 0.0) {
    return 0.0;
  }
  if (!p.distance_schedule.empty()) {
    for (const auto & step : p.distance_schedule) {
      if (d <= step.up_to) {
        return step.power;
      }
    }
    return 0.0;
  }
  const double ttc = d / v;
  const double d_br = v * p.t_s + p.u * v * v / (2.0 * p.b2);
  const double wi = (d - d_br) / (v * p.t_h);
  const int crossed = (wi <= p.c1 ? 1 : 0) + (ttc <= p.c2 ? 1 : 0);
  return crossed == 2 ? p.b2 : crossed == 1 ? p.b1 : 0.0;
}

double detection_probability(const DetectionTable & t, double d, unsigned history, unsigned window)
{
  const double q = std::floor(std::round(d / t.bin_width * 1e9) / 1e9);
  const auto bin = static_cast<std::size_t>(std::max(0.0, q));
  double p = bin < t.by_bin.size() ? t.by_bin[bin] : t.beyond;
  if (window > 0) {
    const unsigned recent = history & ((1u << window) - 1u);
    const double count = std::popcount(recent);
    p += t.history_gain * (2.0 * count - window) / window;
  }
  return std::clamp(p, 0.0, 1.0);
}

bool filter_output(unsigned history, unsigned n_f)
{
  const unsigned count = std::popcount(history & ((1u << n_f) - 1u));
  return 2 * count >= n_f;
}

ControllerPlantSpec aebs_spec(const AebsParams & p)
{
  validate_params(p);
  ControllerPlantSpec spec;
  spec.dims = {"d", "v"};
  spec.ranges = {{-p.d_max, p.d_max}, {0.0, p.v_max}};
  spec.inputs = {"none", "detect"};
  spec.pieces = [p](const Box & box, std::size_t k) { return aebs_pieces(p, box, k); };
  spec.step = [p](const std::vector<double> & x, std::size_t k) {
    const AebsState next = aebs_step({x[0], x[1]}, aebs_control(x[0], x[1], k == kDetect, p), p.tau);
    return std::vector<double>{next.d, next.v};
  };
  spec.labels = [l = p.l](const Box & box) {
    std::vector<std::string> out;
    if (box[0].lo_closed ? box[0].lo <= l : box[0].lo < l) {
      out.emplace_back(kCollisionLabel);
    }
    if (box[1].is_point() && box[1].lo == 0.0) {
      out.emplace_back(kStoppedLabel);
    }
    return out;
  };
  spec.bad_label = kCollisionLabel;
  spec.stop_labels = {kStoppedLabel};
  spec.horizon = p.horizon;
  return spec;
}

Pa aebs_perception(const AebsParams & p, const Abstraction & controller)
{
  const unsigned len = std::max({p.w, p.n_f, 1u});
  const unsigned mask = (1u << len) - 1u;
  const auto & table = p.detection;
  auto bin_of = [&](double d) {
    const double q = std::floor(std::round(d / table.bin_width * 1e9) / 1e9);
    return static_cast<long long>(std::max(0.0, q));
  };

  Pa m;
  m.set_feature_names({"phase", "hist"});
  std::vector<std::vector<ActionId>> by_input(2);
  for (ActionId a = 0; a < controller.pa.actions().size(); ++a) {
    const ActionId id = m.intern_action(controller.pa.action(a).name, ActionOrigin::kReachabilityChoice);
    by_input.at(controller.choices.at(a).input).push_back(id);
  }
  const ActionId sense = m.intern_action("sense", ActionOrigin::kPerceptionInput);

  std::map<std::pair<long long, unsigned>, StateId> senses;
  std::map<unsigned, StateId> reports;
  std::map<StateId, std::pair<long long, unsigned>> sense_of;
  std::map<StateId, unsigned> report_of;
  std::vector<StateId> todo;
  auto sense_state = [&](long long bin, unsigned h) {
    auto [it, fresh] = senses.emplace(std::make_pair(bin, h), 0);
    if (fresh) {
      it->second = m.add_state(
        "sense(b=" + std::to_string(bin) + ",h=" + std::to_string(h) + ")", {}, {0.0, double(h)});
      sense_of[it->second] = {bin, h};
      todo.push_back(it->second);
    }
    return it->second;
  };
  auto report_state = [&](unsigned h) {
    auto [it, fresh] = reports.emplace(h, 0);
    if (fresh) {
      it->second = m.add_state("report(h=" + std::to_string(h) + ")", {}, {1.0, double(h)});
      report_of[it->second] = h;
      todo.push_back(it->second);
    }
    return it->second;
  };
  const double d0 = controller.cells.at(controller.pa.initial())[0];
  const StateId init = sense_state(bin_of(d0), p.initial_history & mask);
  m.set_initial(init);

  while (!todo.empty()) {
    const StateId s = todo.back();
    todo.pop_back();
    if (auto it = sense_of.find(s); it != sense_of.end()) {
      const auto [bin, h] = it->second;
      const double pd = detection_probability(table, double(bin) * table.bin_width, h, p.w);
      Distribution mu;
      for (const auto & [reading, prob] : {std::pair{1u, pd}, std::pair{0u, 1.0 - pd}}) {
        if (prob <= 0.0) {
          continue;
        }
        const unsigned next = ((h << 1) | reading) & mask;
        mu.support.emplace_back(report_state(next), prob);
      }
      m.add_transition(s, sense, std::move(mu));
      continue;
    }
    const unsigned h = report_of.at(s);
    const std::size_t k = filter_output(h, p.n_f) ? kDetect : kNoDetect;
    for (ActionId a : by_input[k]) {
      const StateId dest_cell = controller.choices[a].dest;
      const long long bin = bin_of(controller.cells[dest_cell][0]);
      m.add_transition(s, a, Distribution::dirac(sense_state(bin, h)));
    }
  }
  return m;
}

CaseModel build_aebs_model(const AebsParams & p, const IntervalGrid & grid, const AebsState & initial)
{
  CaseModel out;
  const auto spec = aebs_spec(p);
  out.controller = build_interval_abstraction(spec, grid, {initial.d, initial.v});
  out.perception = aebs_perception(p, out.controller);
  out.model = close_model(out.perception, out.controller, kCollisionLabel);
  out.property = SafetyProperty{kCollisionLabel, std::nullopt};
  out.orders = {aebs_order(), distance_order(), speed_order()};
  return out;
}

PartialOrder distance_order()
{
  return PartialOrder::on_keys("distance", {{"d", KeyDirection::kHigherSafer, 0.0}});
}

PartialOrder speed_order()
{
  return PartialOrder::on_keys("speed", {{"v", KeyDirection::kLowerSafer, 0.0}});
}

PartialOrder aebs_order()
{
  return conjoin(distance_order(), speed_order(), "distance-speed");
}

}  // namespace mosprob
