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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mosprob/pa.hpp"

namespace mosprob
{

/// Interval with independent endpoint closedness. A point has lo == hi with
/// both ends closed.
struct Interval
{
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = false;

  static Interval point(double x) { return {x, x, true, true}; }
  static Interval half_open(double lo, double hi) { return {lo, hi, true, false}; }
  static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }

  [[nodiscard]] bool is_point() const { return lo == hi && lo_closed && hi_closed; }
  [[nodiscard]] bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
  [[nodiscard]] bool contains(double x) const;
};

using Box = std::vector<Interval>;

bool box_contains(const Box & box, const std::vector<double> & x);

/// x' = a x + c on the given sub-box of a cell.
struct AffinePiece
{
  Box domain;
  std::vector<std::vector<double>> a;
  std::vector<double> c;
};

/// Exact image of the piece domain (an axis-aligned box again, with
/// endpoint closedness tracked through the corners).
Box affine_image(const AffinePiece & piece);

/// Uniform grid; width 0 makes a dimension exact (cells are single values).
/// Cells are indexed without bound; lower and upper only validate the
/// initial state.
struct IntervalGrid
{
  std::vector<double> width;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Lower corner of a cell (the value itself on exact dimensions).
using CellKey = std::vector<double>;

Box cell_box(const IntervalGrid & grid, const CellKey & key);
CellKey cell_of(const IntervalGrid & grid, const std::vector<double> & x);
/// Every cell whose box meets the given box, in lexicographic order.
std::vector<CellKey> cells_overlapping(const IntervalGrid & grid, const Box & box);

struct ControllerPlantSpec
{
  std::vector<std::string> dims;
  /// Concrete domain; simulation outside it is an error.
  std::vector<std::pair<double, double>> ranges;
  /// Perception inputs K.
  std::vector<std::string> inputs;
  /// Affine pieces covering box under input k. Controllers with threshold
  /// surfaces return one piece per region the box meets.
  std::function<std::vector<AffinePiece>(const Box &, std::size_t)> pieces;
  /// Concrete step.
  std::function<std::vector<double>(const std::vector<double> &, std::size_t)> step;
  /// A label holds for a cell when it holds for some concrete state in it.
  std::function<std::vector<std::string>(const Box &)> labels;
  std::string bad_label;
  /// Labels that end a run without violating safety (e.g. a stopped car).
  std::vector<std::string> stop_labels;
  std::optional<std::size_t> horizon;
};

/// Cells meeting the image of cell under input k.
std::vector<CellKey> reachable_cells(
  const ControllerPlantSpec & spec, const IntervalGrid & grid, const CellKey & cell, std::size_t k);

struct ChoiceInfo
{
  StateId source = 0;
  std::size_t input = 0;
  StateId dest = 0;
};

struct Abstraction
{
  Pa pa;
  /// Cell and step counter per state.
  std::vector<CellKey> cells;
  std::vector<std::size_t> steps;
  /// Per action id; every action of the abstraction is a reachability choice.
  std::vector<ChoiceInfo> choices;
  /// Cells whose image needed more than one affine piece.
  std::size_t split_cells = 0;
};

/// Label carried by states that end a run without a violation (horizon,
/// stop label, or a cell that maps only onto itself).
inline constexpr const char * kDoneLabel = "done";

/// Interval abstraction over the cells reachable from the cell containing
/// initial. One Dirac transition with a fresh action per (state, input,
/// destination cell).
Abstraction build_interval_abstraction(
  const ControllerPlantSpec & spec, const IntervalGrid & grid, const std::vector<double> & initial);

/// Concrete run under the given inputs; throws std::out_of_range when a state
/// leaves the declared ranges.
std::vector<std::vector<double>> simulate_concrete(
  const ControllerPlantSpec & spec, const std::vector<double> & initial,
  const std::vector<std::size_t> & inputs);

/// True when the cell sequence of a concrete trace is a path of the
/// abstraction (checked until the abstract run halts).
bool is_abstract_path(
  const Abstraction & abs, const IntervalGrid & grid, const std::vector<std::vector<double>> & trace,
  const std::vector<std::size_t> & inputs);

}  // namespace mosprob
