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

#include <stdexcept>

#include "mosprob/casestudies.hpp"
#include "mosprob/errors.hpp"

namespace mosprob
{

Pa close_model(const Pa & perception, const Abstraction & controller, const std::string & bad_label)
{
  const Pa joint = compose(perception, controller.pa);
  const Pa closed = make_absorbing(joint, [&](StateId s) {
    return joint.has_label(s, bad_label) || joint.has_label(s, kDoneLabel);
  });
  return restrict_to_reachable(closed);
}

AebsParams aebs_desk_params()
{
  AebsParams p;
  p.tau = 1.0;
  p.b1 = 2.0;
  p.b2 = 4.0;
  p.c1 = 1.0;
  p.c2 = 8.0;
  p.l = 3.0;
  p.detection.bin_width = 2.0;
  for (int b = 0; b < 10; ++b) {
    p.detection.by_bin.push_back(0.95 - 0.05 * b);
  }
  p.detection.beyond = 0.45;
  p.detection.history_gain = 0.1;
  // Single-reading filter: longer windows multiply the perception states
  // past what full scheduler enumeration can handle.
  p.n_f = 1;
  p.w = 0;
  p.horizon = 3;
  return p;
}

// Speed cells are points so every braking outcome stays exact.
IntervalGrid aebs_desk_grid() { return IntervalGrid{{1.0, 0.0}, {0.0, 0.0}, {20.0, 4.0}}; }

AebsState aebs_desk_initial() { return AebsState{9.0, 1.2}; }

TankParams tank_desk_params()
{
  TankParams p;
  p.tanks = 1;
  p.capacity = 30.0;
  p.out = 2.0;
  p.in = 7.0;
  p.lower_threshold = 10.0;
  p.upper_threshold = 20.0;
  p.horizon = 3;
  p.error = synthetic_tank_errors();
  return p;
}

IntervalGrid tank_desk_grid() { return IntervalGrid{{5.0, 0.0}, {0.0, 0.0}, {30.0, 1.0}}; }

TankState tank_desk_initial() { return TankState{{10.0}, 0}; }

std::vector<std::string> preset_names() { return {"aebs-desk", "tank-desk", "ce1", "ce2", "ce3"}; }

namespace
{

void apply_widths(IntervalGrid & grid, const std::vector<double> & widths, std::size_t dims)
{
  if (widths.size() != dims) {
    throw ModelError("grid override needs " + std::to_string(dims) + " widths");
  }
  for (std::size_t i = 0; i < dims; ++i) {
    grid.width[i] = widths[i];
  }
}

CaseModel aebs_preset(AebsParams p, IntervalGrid grid, AebsState init, const PresetOverrides & o)
{
  if (o.grid) {
    apply_widths(grid, *o.grid, 2);
  }
  if (o.initial) {
    if (o.initial->size() != 2) {
      throw ModelError("AEBS initial state is (d, v)");
    }
    init = AebsState{(*o.initial)[0], (*o.initial)[1]};
  }
  if (o.horizon) {
    p.horizon = o.horizon;
  }
  return build_aebs_model(p, grid, init);
}

CaseModel tank_preset(TankParams p, IntervalGrid grid, TankState init, const PresetOverrides & o)
{
  if (o.grid) {
    apply_widths(grid, *o.grid, p.tanks);
  }
  if (o.initial) {
    if (o.initial->size() != p.tanks) {
      throw ModelError("tank initial state lists one level per tank");
    }
    init.levels = *o.initial;
  }
  if (o.horizon) {
    p.horizon = *o.horizon;
  }
  return build_tank_model(p, grid, init);
}

}  // namespace

CaseModel build_preset(const std::string & name, const PresetOverrides & o)
{
  if (name == "aebs-desk") {
    return aebs_preset(aebs_desk_params(), aebs_desk_grid(), aebs_desk_initial(), o);
  }
  if (name == "tank-desk") {
    return tank_preset(tank_desk_params(), tank_desk_grid(), tank_desk_initial(), o);
  }
  if (name == "ce1") {
    return aebs_preset(ce1_params(), ce_aebs_grid(), AebsState{14.0, 11.0}, o);
  }
  if (name == "ce2") {
    return aebs_preset(ce2_params(0.5), ce_aebs_grid(), AebsState{20.0, 8.0}, o);
  }
  if (name == "ce3") {
    return tank_preset(ce3_params(), ce3_grid(), TankState{{10.0}, 0}, o);
  }
  throw ModelError("unknown preset " + name);
}

}  // namespace mosprob
