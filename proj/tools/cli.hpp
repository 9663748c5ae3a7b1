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
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mosprob/lss.hpp"
#include "mosprob/mos.hpp"
#include "mosprob/pa.hpp"
#include "mosprob/pmc.hpp"

namespace mosprob::cli
{

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kModelError = 2,
  kNoConvergence = 3,
  kCapExceeded = 4,
};

/// Environment variable naming the directory for relative --out paths.
inline constexpr const char * kOutDirEnv = "MOSPROB_OUT_DIR";

inline constexpr const char * kCheckCsvSchema = "# schema: mosprob-check/1";
inline constexpr const char * kCheckCsvHeader =
  "model,grid,initial,horizon,trim,order,probability,iterations,wall_time_s,trim_time_s,states,transitions,"
  "schedulers,error";
inline constexpr const char * kLssCsvSchema = "# schema: mosprob-lss/1";
inline constexpr const char * kLssCsvHeader =
  "model,trim,trial,master_seed,n,traces_per_scheduler,minimum,wall_time_s";
inline constexpr const char * kMosCsvSchema = "# schema: mosprob-mos/1";
inline constexpr const char * kMosCsvHeader = "s1,s2,p_all,p_min,schedulers,min_schedulers";

struct RunConfig
{
  std::optional<std::string> preset;
  std::optional<std::string> model_file;
  std::optional<std::vector<double>> grid;
  std::optional<std::vector<double>> initial;
  std::optional<std::size_t> horizon;
  /// none, pmc, lss or neg.
  std::string trim = "none";
  /// Order name; empty selects the model's first order.
  std::string order;
  std::size_t lss_n = 1;
  double epsilon = 0.05;
  double delta = 0.2;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  bool exact = false;
  unsigned jobs = 1;
  std::uint64_t cap = kDefaultSchedulerCap;
  std::string out;
  /// csv or json; empty picks the command default.
  std::string format;
};

struct LoadedModel
{
  std::string label;
  Pa model;
  SafetyProperty property;
  std::vector<PartialOrder> orders;
};

LoadedModel load_model(const RunConfig & cfg);
const PartialOrder & select_order(const LoadedModel & m, const std::string & name);

struct PreparedModel
{
  Pa model;
  std::optional<TrimReport> report;
  double trim_time_s = 0.0;
};

/// Applies cfg.trim; trimming a model without orders is a ModelError.
PreparedModel prepare(const LoadedModel & m, const RunConfig & cfg);

struct CheckRecord
{
  std::string model;
  std::string grid;
  std::string initial;
  std::string horizon;
  std::string trim;
  std::string order;
  double probability = 0.0;
  std::uint64_t iterations = 0;
  double wall_time_s = 0.0;
  double trim_time_s = 0.0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::string schedulers;
  std::string error;
  std::vector<std::string> warnings;
};

CheckRecord cmd_check(const RunConfig & cfg);

struct SweepSpec
{
  std::vector<std::vector<double>> grids;
  std::vector<std::vector<double>> initials;
  std::vector<std::string> trims;
};

/// One row per (initial, grid, trim), in that nesting order. Failures are
/// recorded in the row's error field.
std::vector<CheckRecord> cmd_sweep(const RunConfig & base, const SweepSpec & sweep);

struct LssTrial
{
  std::size_t trial = 0;
  std::uint64_t master_seed = 0;
  LssResult result;
  double wall_time_s = 0.0;
};

struct LssReport
{
  std::string model;
  std::string trim;
  std::vector<LssTrial> trials;
  double mean = 0.0;
};

/// Trial t runs with master seed cfg.seed + t.
LssReport cmd_lss(const RunConfig & cfg);

struct MosReport
{
  std::string model;
  std::vector<std::pair<std::string, std::string>> pair_names;
  MosValidationReport report;
};

MosReport cmd_validate_mos(const RunConfig & cfg);

struct CounterexampleRow
{
  std::string name;
  double first = 0.0;
  double second = 0.0;
  double expected_first = 0.0;
  double expected_second = 0.0;
  bool pass = false;
};

std::vector<CounterexampleRow> cmd_counterexamples();

std::string check_csv(const std::vector<CheckRecord> & rows);
std::string check_json(const CheckRecord & row);
std::string lss_csv(const LssReport & r);
std::string lss_json(const LssReport & r);
std::string mos_csv(const MosReport & r);
std::string mos_json(const MosReport & r);

/// Resolves --out against MOSPROB_OUT_DIR for relative paths.
std::string output_path(const std::string & out);

/// Full command line entry point; returns the process exit code.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace mosprob::cli
