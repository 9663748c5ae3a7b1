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

#include "mosprob/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mosprob/errors.hpp"

namespace mosprob
{

namespace
{

// Removes float noise such as 2.9999999999999996 before cell indexing.
double snap(double x)
{
  const double r = std::round(x);
  return std::abs(x - r) < 1e-9 ? r : x;
}

double snap_point(double x) { return snap(std::round(x * 1e9) / 1e9); }

std::string fmt(double x)
{
  std::ostringstream os;
  os << x;
  return os.str();
}

std::string cell_name(const ControllerPlantSpec & spec, const IntervalGrid & grid, const CellKey & key)
{
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    out += i == 0 ? "" : ",";
    out += spec.dims[i];
    if (grid.width[i] == 0.0) {
      out += "=" + fmt(key[i]);
    } else {
      out += "[" + fmt(key[i]) + "," + fmt(key[i] + grid.width[i]) + ")";
    }
  }
  return out;
}

struct Image
{
  std::vector<CellKey> cells;
  std::size_t pieces = 0;
};

Image image_of(const ControllerPlantSpec & spec, const IntervalGrid & grid, const CellKey & cell, std::size_t k)
{
  const Box box = cell_box(grid, cell);
  const auto pieces = spec.pieces(box, k);
  Image out;
  out.pieces = pieces.size();
  for (const auto & p : pieces) {
    if (p.domain.size() != box.size()) {
      throw ModelError("affine piece has the wrong dimension");
    }
    bool empty = false;
    for (const auto & iv : p.domain) {
      empty = empty || iv.empty();
    }
    if (empty) {
      continue;
    }
    for (auto & c : cells_overlapping(grid, affine_image(p))) {
      out.cells.push_back(std::move(c));
    }
  }
  std::sort(out.cells.begin(), out.cells.end());
  out.cells.erase(std::unique(out.cells.begin(), out.cells.end()), out.cells.end());
  return out;
}

}  // namespace

bool Interval::contains(double x) const
{
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

bool box_contains(const Box & box, const std::vector<double> & x)
{
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (!box[i].contains(x[i])) {
      return false;
    }
  }
  return true;
}

Box affine_image(const AffinePiece & piece)
{
  const auto & dom = piece.domain;
  Box out(piece.c.size());
  for (std::size_t j = 0; j < piece.c.size(); ++j) {
    Interval iv{piece.c[j], piece.c[j], true, true};
    for (std::size_t i = 0; i < dom.size(); ++i) {
      const double a = piece.a[j][i];
      if (a > 0.0) {
        iv.lo += a * dom[i].lo;
        iv.hi += a * dom[i].hi;
        iv.lo_closed = iv.lo_closed && dom[i].lo_closed;
        iv.hi_closed = iv.hi_closed && dom[i].hi_closed;
      } else if (a < 0.0) {
        iv.lo += a * dom[i].hi;
        iv.hi += a * dom[i].lo;
        iv.lo_closed = iv.lo_closed && dom[i].hi_closed;
        iv.hi_closed = iv.hi_closed && dom[i].lo_closed;
      }
    }
    iv.lo = snap(iv.lo);
    iv.hi = snap(iv.hi);
    if (iv.lo == iv.hi) {
      iv.lo_closed = iv.hi_closed = true;
    }
    out[j] = iv;
  }
  return out;
}

Box cell_box(const IntervalGrid & grid, const CellKey & key)
{
  Box out(key.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    out[i] = grid.width[i] == 0.0 ? Interval::point(key[i]) : Interval::half_open(key[i], key[i] + grid.width[i]);
  }
  return out;
}

CellKey cell_of(const IntervalGrid & grid, const std::vector<double> & x)
{
  CellKey key(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = grid.width[i];
    if (w == 0.0) {
      key[i] = snap_point(x[i]);
    } else {
      key[i] = grid.lower[i] + std::floor(snap((x[i] - grid.lower[i]) / w)) * w;
    }
  }
  return key;
}

std::vector<CellKey> cells_overlapping(const IntervalGrid & grid, const Box & box)
{
  std::vector<std::vector<double>> per_dim(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const auto & iv = box[i];
    const double w = grid.width[i];
    if (iv.empty()) {
      return {};
    }
    if (w == 0.0) {
      if (iv.lo != iv.hi) {
        throw ModelError("exact grid dimension received a non-degenerate image");
      }
      per_dim[i].push_back(snap_point(iv.lo));
      continue;
    }
    const double qlo = snap((iv.lo - grid.lower[i]) / w);
    const double qhi = snap((iv.hi - grid.lower[i]) / w);
    const auto first = static_cast<long long>(std::floor(qlo));
    long long last = iv.hi_closed ? static_cast<long long>(std::floor(qhi))
                                  : static_cast<long long>(std::ceil(qhi)) - 1;
    last = std::max(last, first);
    for (long long c = first; c <= last; ++c) {
      per_dim[i].push_back(grid.lower[i] + static_cast<double>(c) * w);
    }
  }
  std::vector<CellKey> out{CellKey{}};
  for (const auto & values : per_dim) {
    std::vector<CellKey> next;
    for (const auto & prefix : out) {
      for (double v : values) {
        CellKey k = prefix;
        k.push_back(v);
        next.push_back(std::move(k));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<CellKey> reachable_cells(
  const ControllerPlantSpec & spec, const IntervalGrid & grid, const CellKey & cell, std::size_t k)
{
  return image_of(spec, grid, cell, k).cells;
}

Abstraction build_interval_abstraction(
  const ControllerPlantSpec & spec, const IntervalGrid & grid, const std::vector<double> & initial)
{
  const std::size_t n = spec.dims.size();
  if (grid.width.size() != n || grid.lower.size() != n || grid.upper.size() != n || initial.size() != n) {
    throw ModelError("grid and initial state must match the state dimensions");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (grid.width[i] < 0.0) {
      throw ModelError("grid width must be non-negative");
    }
    if (initial[i] < grid.lower[i] || initial[i] > grid.upper[i]) {
      throw ModelError("initial state outside grid bounds on " + spec.dims[i]);
    }
  }

  Abstraction abs;
  Pa & pa = abs.pa;
  auto names = spec.dims;
  if (spec.horizon) {
    names.emplace_back("t");
  }
  pa.set_feature_names(names);

  std::map<std::pair<CellKey, std::size_t>, StateId> ids;
  std::deque<StateId> queue;
  auto get = [&](const CellKey & key, std::size_t t) {
    auto it = ids.find({key, t});
    if (it != ids.end()) {
      return it->second;
    }
    std::vector<double> feats = key;
    std::string name = cell_name(spec, grid, key);
    if (spec.horizon) {
      feats.push_back(static_cast<double>(t));
      name += "@" + std::to_string(t);
    }
    const StateId s = pa.add_state(name, spec.labels(cell_box(grid, key)), feats);
    ids.emplace(std::make_pair(key, t), s);
    abs.cells.push_back(key);
    abs.steps.push_back(t);
    queue.push_back(s);
    return s;
  };
  pa.set_initial(get(cell_of(grid, initial), 0));

  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    if (pa.has_label(s, spec.bad_label)) {
      continue;
    }
    bool stop = false;
    for (const auto & l : spec.stop_labels) {
      stop = stop || pa.has_label(s, l);
    }
    const std::size_t t = abs.steps[s];
    if (stop || (spec.horizon && t >= *spec.horizon)) {
      pa.add_label(s, kDoneLabel);
      continue;
    }
    const CellKey cell = abs.cells[s];
    std::vector<std::vector<CellKey>> images;
    bool split = false;
    bool fixpoint = true;
    for (std::size_t k = 0; k < spec.inputs.size(); ++k) {
      auto img = image_of(spec, grid, cell, k);
      split = split || img.pieces > 1;
      fixpoint = fixpoint && img.cells.size() == 1 && img.cells.front() == cell;
      images.push_back(std::move(img.cells));
    }
    abs.split_cells += split ? 1 : 0;
    if (fixpoint) {
      pa.add_label(s, kDoneLabel);
      continue;
    }
    const std::size_t next_t = spec.horizon ? t + 1 : 0;
    for (std::size_t k = 0; k < images.size(); ++k) {
      for (std::size_t j = 0; j < images[k].size(); ++j) {
        const StateId dest = get(images[k][j], next_t);
        const std::string label = "c" + std::to_string(s) + "_k" + std::to_string(k) + "_" + std::to_string(j);
        const ActionId a = pa.intern_action(label, ActionOrigin::kReachabilityChoice);
        pa.add_transition(s, a, Distribution::dirac(dest));
        abs.choices.push_back(ChoiceInfo{s, k, dest});
      }
    }
  }
  return abs;
}

std::vector<std::vector<double>> simulate_concrete(
  const ControllerPlantSpec & spec, const std::vector<double> & initial,
  const std::vector<std::size_t> & inputs)
{
  auto check = [&](const std::vector<double> & x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < spec.ranges[i].first || x[i] > spec.ranges[i].second) {
        throw std::out_of_range("state leaves the declared range of " + spec.dims[i]);
      }
    }
  };
  std::vector<std::vector<double>> trace{initial};
  check(initial);
  for (std::size_t k : inputs) {
    if (k >= spec.inputs.size()) {
      throw std::invalid_argument("unknown perception input");
    }
    trace.push_back(spec.step(trace.back(), k));
    check(trace.back());
  }
  return trace;
}

bool is_abstract_path(
  const Abstraction & abs, const IntervalGrid & grid, const std::vector<std::vector<double>> & trace,
  const std::vector<std::size_t> & inputs)
{
  StateId s = abs.pa.initial();
  if (abs.cells[s] != cell_of(grid, trace.front())) {
    return false;
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (abs.pa.is_terminal(s)) {
      return true;
    }
    const CellKey want = cell_of(grid, trace[i + 1]);
    bool found = false;
    for (const auto & t : abs.pa.transitions(s)) {
      const auto & c = abs.choices[t.action];
      if (c.input == inputs[i] && abs.cells[c.dest] == want) {
        s = c.dest;
        found = true;
        break;
      }
    }
    if (!found) {
      return false;
    }
  }
  return true;
}

}  // namespace mosprob
