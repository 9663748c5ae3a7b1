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
#include <utility>
#include <vector>

#include "mosprob/abstraction.hpp"
#include "mosprob/mos.hpp"
#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"

namespace mosprob
{

/// Composed case-study model together with its parts.
struct CaseModel
{
  /// compose(perception, controller) with bad and done states absorbing,
  /// restricted to the reachable part.
  Pa model;
  Abstraction controller;
  Pa perception;
  SafetyProperty property;
  /// Named MoS orders; the first is the default.
  std::vector<PartialOrder> orders;
};

/// Composes perception with the abstraction and closes the result.
Pa close_model(const Pa & perception, const Abstraction & controller, const std::string & bad_label);

// ---------------------------------------------------------------- AEBS

/// Low-level detection probability per distance bin, shifted by
/// gain * (2 * detections - W) / W over the last W readings and clamped to [0, 1].
struct DetectionTable
{
  double bin_width = 10.0;
  std::vector<double> by_bin;
  /// Probability for bins past the end of by_bin.
  double beyond = 0.0;
  double history_gain = 0.1;
};

struct BrakeStep
{
  /// Applies for d <= up_to (first matching entry wins).
  double up_to = 0.0;
  double power = 0.0;
};

struct AebsParams
{
  double tau = 1.0;
  double b1 = 4.0;
  /// Maximum braking, also a_max in the warning index.
  double b2 = 8.0;
  double c1 = 1.0;
  double c2 = 2.0;
  double t_h = 2.0;
  double t_s = 0.0;
  double u = 1.0;
  /// Collision when d <= l.
  double l = 5.0;
  /// When non-empty, braking depends on distance only (used by the
  /// counterexamples) instead of the TTC / WI table.
  std::vector<BrakeStep> distance_schedule;
  DetectionTable detection;
  unsigned n_f = 3;
  unsigned w = 3;
  unsigned initial_history = 0;
  std::optional<std::size_t> horizon;
  double d_max = 1000.0;
  double v_max = 100.0;
};

void validate_params(const AebsParams & p);

struct AebsState
{
  double d = 0.0;
  double v = 0.0;
};

inline constexpr const char * kCollisionLabel = "collision";
inline constexpr const char * kStoppedLabel = "stopped";

AebsState aebs_step(const AebsState & s, double b, double tau);
double aebs_control(double d, double v, bool detected, const AebsParams & p);
double detection_probability(const DetectionTable & t, double d, unsigned history, unsigned window);
/// Majority vote over the last n_f readings (bit 0 is the newest).
bool filter_output(unsigned history, unsigned n_f);

/// Dimensions (d, v); inputs {none, detect}.
ControllerPlantSpec aebs_spec(const AebsParams & p);
Pa aebs_perception(const AebsParams & p, const Abstraction & controller);
CaseModel build_aebs_model(const AebsParams & p, const IntervalGrid & grid, const AebsState & initial);

PartialOrder distance_order();
PartialOrder speed_order();
/// Conjunction of the distance and speed orders.
PartialOrder aebs_order();

// ---------------------------------------------------------------- tanks

/// Perception error: additive offsets e in [-ew, ew] (additive[e + ew]),
/// plus spurious empty and full readings.
struct TankErrorModel
{
  int ew = 6;
  std::vector<double> additive;
  double empty = 0.0;
  double full = 0.0;
};

/// Triangular offsets of mass 0.9 over [-6, 6], empty 0.04, full 0.06.
TankErrorModel synthetic_tank_errors();

struct TankParams
{
  unsigned tanks = 1;
  double capacity = 30.0;
  double out = 3.0;
  double in = 10.0;
  double lower_threshold = 10.0;
  double upper_threshold = 20.0;
  std::size_t horizon = 5;
  TankErrorModel error = synthetic_tank_errors();
};

void validate_params(const TankParams & p);

struct TankState
{
  std::vector<double> levels;
  /// 0 when no tank is filling, else the 1-based tank id.
  std::size_t filling = 0;
};

inline constexpr const char * kUnsafeLabel = "unsafe";

TankState tank_step(const TankState & s, std::size_t fill_target, const TankParams & p);
std::size_t tank_control(const std::vector<double> & perceived, std::size_t filling, const TankParams & p);

/// Dimensions (w1..wJ, fill); inputs {none, tank1..tankJ}.
ControllerPlantSpec tank_spec(const TankParams & p);
Pa tank_perception(const TankParams & p, const Abstraction & controller);
CaseModel build_tank_model(const TankParams & p, const IntervalGrid & grid, const TankState & initial);

/// Levels move toward capacity / 2.
PartialOrder level_order(const TankParams & p);

// ---------------------------------------------------------------- counterexamples

/// Safety from (14, 11) and (13, 11) with one braking power 10 and
/// detection 1 - ceil(d) / 20 (or the given curve).
std::pair<double, double> counterexample_distance();
std::pair<double, double> counterexample_distance(double (*detect)(double));
/// (slower start (20, 8), faster start (20, 9)) for detection probability p.
std::pair<double, double> counterexample_speed(double p);
/// Safety from w = 10 and w = 40 in the single-tank setting.
std::pair<double, double> counterexample_tank();

AebsParams ce1_params();
AebsParams ce2_params(double p);
TankParams ce3_params();
/// Exact grids used to run the counterexamples through the model builders.
IntervalGrid ce_aebs_grid();
IntervalGrid ce3_grid();

// ---------------------------------------------------------------- presets

AebsParams aebs_desk_params();
IntervalGrid aebs_desk_grid();
AebsState aebs_desk_initial();
TankParams tank_desk_params();
IntervalGrid tank_desk_grid();
TankState tank_desk_initial();

/// Names accepted by build_preset.
std::vector<std::string> preset_names();

struct PresetOverrides
{
  /// Cell widths per dimension.
  std::optional<std::vector<double>> grid;
  /// Initial concrete state (d, v) or (w1..wJ).
  std::optional<std::vector<double>> initial;
  std::optional<std::size_t> horizon;
};

CaseModel build_preset(const std::string & name, const PresetOverrides & overrides = {});

}  // namespace mosprob
