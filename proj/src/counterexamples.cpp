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
#include <stdexcept>

#include "mosprob/casestudies.hpp"

namespace mosprob
{

namespace
{

double default_detection(double d) { return std::clamp(1.0 - std::ceil(d) / 20.0, 0.0, 1.0); }

// Safety of the single-obstacle braking recursion with collision at d <= 0.
template <typename Detect, typename Brake>
double braking_run(double d, double v, const Detect & detect, const Brake & brake)
{
  if (d <= 0.0) {
    return 0.0;
  }
  if (v <= 0.0) {
    return 1.0;
  }
  const double pd = detect(d);
  double total = 0.0;
  if (pd > 0.0) {
    total += pd * braking_run(d - v, std::max(0.0, v - brake(d)), detect, brake);
  }
  if (pd < 1.0) {
    total += (1.0 - pd) * braking_run(d - v, v, detect, brake);
  }
  return total;
}

double binomial_tail(unsigned n, double q, unsigned k)
{
  double total = 0.0;
  for (unsigned i = k; i <= n; ++i) {
    double choose = 1.0;
    for (unsigned j = 1; j <= i; ++j) {
      choose = choose * (n - i + j) / j;
    }
    total += choose * std::pow(q, i) * std::pow(1.0 - q, n - i);
  }
  return total;
}

}  // namespace

std::pair<double, double> counterexample_distance() { return counterexample_distance(&default_detection); }

std::pair<double, double> counterexample_distance(double (*detect)(double))
{
  const auto brake = [](double) { return 10.0; };
  return {braking_run(14.0, 11.0, detect, brake), braking_run(13.0, 11.0, detect, brake)};
}

std::pair<double, double> counterexample_speed(double p)
{
  if (p < 0.0 || p > 1.0) {
    throw std::invalid_argument("detection probability must lie in [0, 1]");
  }
  return {p * p * (1.0 + 2.0 * p - 3.0 * p * p + p * p * p), p};
}

std::pair<double, double> counterexample_tank()
{
  // Each step fills (+37) with probability 0.4, otherwise drains 3.
  const double fill = 0.4;
  const double low = 1.0 - std::pow(1.0 - fill, 4) - binomial_tail(4, fill, 3);
  const double mid = 1.0 - binomial_tail(4, fill, 2);
  return {low, mid};
}

AebsParams ce1_params()
{
  AebsParams p;
  p.tau = 1.0;
  p.b1 = 10.0;
  p.b2 = 10.0;
  p.l = 0.0;
  p.distance_schedule = {{std::numeric_limits<double>::infinity(), 10.0}};
  p.detection.bin_width = 1.0;
  for (int b = 0; b <= 20; ++b) {
    p.detection.by_bin.push_back(1.0 - b / 20.0);
  }
  p.detection.beyond = 0.0;
  p.detection.history_gain = 0.0;
  p.n_f = 1;
  p.w = 0;
  return p;
}

AebsParams ce2_params(double prob)
{
  AebsParams p = ce1_params();
  p.distance_schedule = {{11.0, 10.0}, {std::numeric_limits<double>::infinity(), 3.0}};
  p.detection.by_bin.clear();
  p.detection.beyond = prob;
  return p;
}

TankParams ce3_params()
{
  TankParams p;
  p.tanks = 1;
  p.capacity = 100.0;
  p.out = 3.0;
  p.in = 40.0;
  p.lower_threshold = 50.0;
  p.upper_threshold = 90.0;
  p.horizon = 4;
  p.error.ew = 0;
  p.error.additive = {0.0};
  p.error.empty = 0.4;
  p.error.full = 0.6;
  return p;
}

IntervalGrid ce_aebs_grid() { return IntervalGrid{{0.0, 0.0}, {0.0, 0.0}, {1000.0, 100.0}}; }

IntervalGrid ce3_grid() { return IntervalGrid{{1.0, 0.0}, {0.0, 0.0}, {100.0, 1.0}}; }

}  // namespace mosprob
