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

#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mosprob/casestudies.hpp"
#include "mosprob/errors.hpp"
#include "mosprob/model_io.hpp"
#include "mosprob/parallel.hpp"

namespace mosprob::cli
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::optional<std::vector<double>> & xs)
{
  if (!xs) {
    return "";
  }
  std::string out;
  for (std::size_t i = 0; i < xs->size(); ++i) {
    out += (i ? ";" : "") + num((*xs)[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string & text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char * end = nullptr;
    const double x = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size()) {
      throw ModelError("not a number list: " + text);
    }
    out.push_back(x);
  }
  if (out.empty()) {
    throw ModelError("empty number list");
  }
  return out;
}

std::string csv_field(const std::string & s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') {
      out += "\"\"";
    } else {
      out.push_back(c);
    }
  }
  return out + "\"";
}

void check_trim_mode(const std::string & trim)
{
  if (trim != "none" && trim != "pmc" && trim != "lss" && trim != "neg") {
    throw ModelError("unknown trim mode " + trim + " (none, pmc, lss, neg)");
  }
}

}  // namespace

// ---------------------------------------------------------------- models

LoadedModel load_model(const RunConfig & cfg)
{
  if (cfg.preset.has_value() == cfg.model_file.has_value()) {
    throw ModelError("give exactly one of --preset and --model");
  }
  LoadedModel out;
  if (cfg.preset) {
    PresetOverrides o;
    o.grid = cfg.grid;
    o.initial = cfg.initial;
    o.horizon = cfg.horizon;
    CaseModel cm = build_preset(*cfg.preset, o);
    out.label = *cfg.preset;
    out.model = std::move(cm.model);
    out.property = cm.property;
    out.orders = std::move(cm.orders);
    return out;
  }
  if (cfg.grid || cfg.initial) {
    throw ModelError("--grid and --initial only apply to presets");
  }
  LoweredModel low = lower(load_model_file(*cfg.model_file));
  out.label = *cfg.model_file;
  out.model = std::move(low.pa);
  out.property = low.property;
  if (cfg.horizon) {
    out.property.horizon = cfg.horizon;
  }
  out.orders = std::move(low.orders);
  return out;
}

const PartialOrder & select_order(const LoadedModel & m, const std::string & name)
{
  if (m.orders.empty()) {
    throw ModelError("model declares no orders; trimming is not available");
  }
  if (name.empty()) {
    return m.orders.front();
  }
  for (const auto & o : m.orders) {
    if (o.name() == name) {
      return o;
    }
  }
  throw ModelError("unknown order " + name);
}

PreparedModel prepare(const LoadedModel & m, const RunConfig & cfg)
{
  check_trim_mode(cfg.trim);
  PreparedModel out;
  if (cfg.trim == "none") {
    out.model = m.model;
    return out;
  }
  const PartialOrder & order = select_order(m, cfg.order);
  const auto t0 = Clock::now();
  TrimOutput trimmed;
  if (cfg.trim == "pmc") {
    trimmed = trim_pmc(m.model, order);
  } else if (cfg.trim == "neg") {
    trimmed = trim_pmc(m.model, negate(order));
  } else {
    trimmed = trim_lss(m.model, order);
  }
  out.trim_time_s = seconds_since(t0);
  out.model = std::move(trimmed.first);
  out.report = std::move(trimmed.second);
  return out;
}

// ---------------------------------------------------------------- commands

CheckRecord cmd_check(const RunConfig & cfg)
{
  CheckRecord row;
  row.model = cfg.preset ? *cfg.preset : cfg.model_file.value_or("");
  row.grid = join(cfg.grid);
  row.initial = join(cfg.initial);
  row.trim = cfg.trim;
  const LoadedModel m = load_model(cfg);
  row.horizon = m.property.horizon ? std::to_string(*m.property.horizon) : "";
  row.order = cfg.trim == "none" ? "" : select_order(m, cfg.order).name();
  const PreparedModel p = prepare(m, cfg);
  const auto t0 = Clock::now();
  const CheckResult r = min_safety_prob(p.model, m.property);
  row.wall_time_s = seconds_since(t0);
  row.trim_time_s = p.trim_time_s;
  row.probability = r.probability;
  row.iterations = r.iterations;
  row.states = p.model.num_states();
  row.transitions = p.model.num_transitions();
  row.schedulers = count_schedulers(p.model).str();
  row.warnings = r.warnings;
  return row;
}

std::vector<CheckRecord> cmd_sweep(const RunConfig & base, const SweepSpec & sweep)
{
  std::vector<std::optional<std::vector<double>>> initials;
  for (const auto & i : sweep.initials) {
    initials.emplace_back(i);
  }
  if (initials.empty()) {
    initials.emplace_back(base.initial);
  }
  std::vector<std::optional<std::vector<double>>> grids;
  for (const auto & g : sweep.grids) {
    grids.emplace_back(g);
  }
  if (grids.empty()) {
    grids.emplace_back(base.grid);
  }
  std::vector<std::string> trims = sweep.trims.empty() ? std::vector<std::string>{base.trim} : sweep.trims;
  std::vector<RunConfig> configs;
  for (const auto & init : initials) {
    for (const auto & grid : grids) {
      for (const auto & trim : trims) {
        RunConfig c = base;
        c.initial = init;
        c.grid = grid;
        c.trim = trim;
        configs.push_back(std::move(c));
      }
    }
  }
  std::vector<CheckRecord> rows(configs.size());
  parallel_for(configs.size(), base.jobs, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      try {
        rows[i] = cmd_check(configs[i]);
      } catch (const std::exception & ex) {
        CheckRecord & row = rows[i];
        row.model = configs[i].preset ? *configs[i].preset : configs[i].model_file.value_or("");
        row.grid = join(configs[i].grid);
        row.initial = join(configs[i].initial);
        row.trim = configs[i].trim;
        row.error = ex.what();
      }
    }
  });
  return rows;
}

LssReport cmd_lss(const RunConfig & cfg)
{
  if (cfg.trials == 0) {
    throw ModelError("--trials must be positive");
  }
  const LoadedModel m = load_model(cfg);
  const PreparedModel p = prepare(m, cfg);
  LssReport out;
  out.model = m.label;
  out.trim = cfg.trim;
  double total = 0.0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    LssConfig lc;
    lc.n = cfg.lss_n;
    lc.epsilon = cfg.epsilon;
    lc.delta = cfg.delta;
    lc.master_seed = cfg.seed + t;
    lc.exact = cfg.exact;
    lc.jobs = cfg.jobs;
    validate_config(lc);
    const auto t0 = Clock::now();
    LssTrial trial{t, lc.master_seed, lss_min(p.model, m.property, lc), 0.0};
    trial.wall_time_s = seconds_since(t0);
    total += trial.result.minimum;
    out.trials.push_back(std::move(trial));
  }
  out.mean = total / static_cast<double>(cfg.trials);
  return out;
}

MosReport cmd_validate_mos(const RunConfig & cfg)
{
  const LoadedModel m = load_model(cfg);
  RunConfig trim_cfg = cfg;
  if (trim_cfg.trim == "none") {
    trim_cfg.trim = "pmc";
  }
  const PreparedModel p = prepare(m, trim_cfg);
  const auto pairs = trimmed_pairs(*p.report);
  MosReport out;
  out.model = m.label;
  for (const auto & [a, b] : pairs) {
    out.pair_names.emplace_back(m.model.state_name(a), m.model.state_name(b));
  }
  if (pairs.empty()) {
    return out;
  }
  MosValidationOptions opt;
  opt.cap = cfg.cap;
  opt.jobs = cfg.jobs;
  out.report = validate_mos(m.model, m.property, pairs, opt);
  return out;
}

std::vector<CounterexampleRow> cmd_counterexamples()
{
  std::vector<CounterexampleRow> rows;
  const auto add = [&](const char * name, std::pair<double, double> got, double e1, double e2) {
    CounterexampleRow r{name, got.first, got.second, e1, e2, false};
    r.pass = std::abs(got.first - e1) <= 1e-9 && std::abs(got.second - e2) <= 1e-9;
    rows.push_back(r);
  };
  add("ce1", counterexample_distance(), 0.2955, 0.315);
  add("ce2", counterexample_speed(0.5), 0.34375, 0.5);
  add("ce3", counterexample_tank(), 0.6912, 0.4752);
  return rows;
}

// ---------------------------------------------------------------- output

std::string check_csv(const std::vector<CheckRecord> & rows)
{
  std::ostringstream out;
  out << kCheckCsvSchema << "\n" << kCheckCsvHeader << "\n";
  for (const auto & r : rows) {
    out << csv_field(r.model) << ',' << csv_field(r.grid) << ',' << csv_field(r.initial) << ',' << r.horizon << ','
        << r.trim << ',' << csv_field(r.order) << ',';
    if (r.error.empty()) {
      out << num(r.probability) << ',' << r.iterations << ',' << num(r.wall_time_s) << ',' << num(r.trim_time_s)
          << ',' << r.states << ',' << r.transitions << ',' << r.schedulers << ',';
    } else {
      out << ",,,,,,," << csv_field(r.error);
    }
    out << "\n";
  }
  return out.str();
}

std::string check_json(const CheckRecord & r)
{
  nlohmann::json j{
    {"model", r.model},
    {"grid", r.grid},
    {"initial", r.initial},
    {"horizon", r.horizon},
    {"trim", r.trim},
    {"order", r.order},
    {"probability", r.probability},
    {"iterations", r.iterations},
    {"wall_time_s", r.wall_time_s},
    {"trim_time_s", r.trim_time_s},
    {"states", r.states},
    {"transitions", r.transitions},
    {"schedulers", r.schedulers},
    {"warnings", r.warnings}};
  if (!r.error.empty()) {
    j["error"] = r.error;
  }
  return j.dump(2) + "\n";
}

std::string lss_csv(const LssReport & r)
{
  std::ostringstream out;
  out << kLssCsvSchema << "\n" << kLssCsvHeader << "\n";
  for (const auto & t : r.trials) {
    out << csv_field(r.model) << ',' << r.trim << ',' << t.trial << ',' << t.master_seed << ','
        << t.result.estimates.size() << ',' << t.result.traces_per_scheduler << ',' << num(t.result.minimum) << ','
        << num(t.wall_time_s) << "\n";
  }
  return out.str();
}

std::string lss_json(const LssReport & r)
{
  nlohmann::json trials = nlohmann::json::array();
  for (const auto & t : r.trials) {
    trials.push_back(
      {{"trial", t.trial},
       {"master_seed", t.master_seed},
       {"seeds", t.result.seeds},
       {"estimates", t.result.estimates},
       {"minimum", t.result.minimum},
       {"traces_per_scheduler", t.result.traces_per_scheduler},
       {"wall_time_s", t.wall_time_s}});
  }
  const nlohmann::json j{{"model", r.model}, {"trim", r.trim}, {"trials", trials}, {"mean", r.mean}};
  return j.dump(2) + "\n";
}

std::string mos_csv(const MosReport & r)
{
  std::ostringstream out;
  out << kMosCsvSchema << "\n" << kMosCsvHeader << "\n";
  for (std::size_t i = 0; i < r.report.rows.size(); ++i) {
    const auto & row = r.report.rows[i];
    out << csv_field(r.pair_names[i].first) << ',' << csv_field(r.pair_names[i].second) << ',' << num(row.p_all)
        << ',' << num(row.p_min) << ',' << r.report.scheduler_count << ',' << r.report.min_scheduler_count << "\n";
  }
  return out.str();
}

std::string mos_json(const MosReport & r)
{
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < r.report.rows.size(); ++i) {
    rows.push_back(
      {{"s1", r.pair_names[i].first},
       {"s2", r.pair_names[i].second},
       {"p_all", r.report.rows[i].p_all},
       {"p_min", r.report.rows[i].p_min}});
  }
  const nlohmann::json j{
    {"model", r.model},
    {"schedulers", r.report.scheduler_count},
    {"min_schedulers", r.report.min_scheduler_count},
    {"min_probability", r.report.min_probability},
    {"pairs", rows}};
  return j.dump(2) + "\n";
}

std::string output_path(const std::string & out)
{
  const std::filesystem::path p(out);
  const char * dir = std::getenv(kOutDirEnv);
  if (p.is_relative() && dir != nullptr && *dir != '\0') {
    return (std::filesystem::path(dir) / p).string();
  }
  return out;
}

namespace
{

void emit(const std::string & text, const RunConfig & cfg, std::ostream & out, std::ostream & err)
{
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  const std::string path = output_path(cfg.out);
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent);
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw ModelError("cannot write " + path);
  }
  file << text;
  err << "wrote " << path << "\n";
}

std::string pick_format(const RunConfig & cfg, const char * fallback)
{
  const std::string f = cfg.format.empty() ? fallback : cfg.format;
  if (f != "csv" && f != "json") {
    throw ModelError("unknown format " + f + " (csv, json)");
  }
  return f;
}

void add_model_options(CLI::App & sub, RunConfig & cfg, std::string & preset, std::string & file)
{
  sub.add_option("--preset", preset, "Built-in model: aebs-desk, tank-desk, ce1, ce2, ce3");
  sub.add_option("--model", file, "Model file (.mosm text or .json)");
  sub.add_option("--grid", cfg.grid, "Cell widths, comma separated")->delimiter(',');
  sub.add_option("--initial", cfg.initial, "Initial concrete state, comma separated")->delimiter(',');
  sub.add_option("--horizon", cfg.horizon, "Step bound of the safety property");
  sub.add_option("--trim", cfg.trim, "none | pmc | lss | neg")->capture_default_str();
  sub.add_option("--order", cfg.order, "Order name (default: the model's first)");
  sub.add_option("--out", cfg.out, "Output file (relative paths resolve against $MOSPROB_OUT_DIR)");
  sub.add_option("--format", cfg.format, "csv | json");
  sub.add_option("--jobs", cfg.jobs, "Worker threads")->capture_default_str();
}

void add_lss_options(CLI::App & sub, RunConfig & cfg)
{
  sub.add_option("--lss-n", cfg.lss_n, "Schedulers sampled per trial")->capture_default_str();
  sub.add_option("--epsilon", cfg.epsilon, "Absolute error per estimate")->capture_default_str();
  sub.add_option("--delta", cfg.delta, "Failure probability per estimate")->capture_default_str();
  sub.add_option("--seed", cfg.seed, "Master seed of trial 0")->capture_default_str();
  sub.add_option("--trials", cfg.trials, "Independent trials")->capture_default_str();
  sub.add_flag("--exact-solve", cfg.exact, "Solve each sampled scheduler exactly");
}

}  // namespace

int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err)
{
  CLI::App app{"Probabilistic model checking with monotonic safety trimming", "mosprob"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML file");
  std::string write_config;
  app.add_option("--write-config", write_config, "Write the options given on this run as TOML and continue")
    ->configurable(false);

  RunConfig cfg;
  std::string preset;
  std::string file;
  std::vector<std::string> sweep_grids;
  std::vector<std::string> sweep_initials;
  std::vector<std::string> sweep_trims;

  auto * check = app.add_subcommand("check", "Minimum safety probability by value iteration");
  add_model_options(*check, cfg, preset, file);

  auto * sweep = app.add_subcommand("sweep", "check over grids, initial states and trim modes");
  add_model_options(*sweep, cfg, preset, file);
  sweep->add_option("--grids", sweep_grids, "Grid width lists, e.g. 1,0 2,0");
  sweep->add_option("--initials", sweep_initials, "Initial states, e.g. 9,1.2 10,1.2");
  sweep->add_option("--trims", sweep_trims, "Trim modes");

  auto * lss = app.add_subcommand("lss", "Lightweight scheduler sampling");
  add_model_options(*lss, cfg, preset, file);
  add_lss_options(*lss, cfg);

  auto * mos = app.add_subcommand("validate-mos", "Share of schedulers agreeing with each trimmed pair");
  add_model_options(*mos, cfg, preset, file);
  mos->add_option("--cap-schedulers", cfg.cap, "Largest scheduler count to enumerate")->capture_default_str();

  auto * exp = app.add_subcommand("export", "Write a model document");
  add_model_options(*exp, cfg, preset, file);

  app.add_subcommand("counterexamples", "Closed-form counterexample values against their references");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp & e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp & e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError & e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  }
  if (!preset.empty()) {
    cfg.preset = preset;
  }
  if (!file.empty()) {
    cfg.model_file = file;
  }

  try {
    if (!write_config.empty()) {
      std::ofstream cfg_file(output_path(write_config));
      cfg_file << app.config_to_str(false, false);
    }
    if (*check) {
      const std::string f = pick_format(cfg, "json");
      const CheckRecord row = cmd_check(cfg);
      for (const auto & w : row.warnings) {
        err << "warning: " << w << "\n";
      }
      emit(f == "json" ? check_json(row) : check_csv({row}), cfg, out, err);
    } else if (*sweep) {
      pick_format(cfg, "csv");
      SweepSpec spec;
      for (const auto & g : sweep_grids) {
        spec.grids.push_back(parse_list(g));
      }
      for (const auto & i : sweep_initials) {
        spec.initials.push_back(parse_list(i));
      }
      spec.trims = sweep_trims;
      for (const auto & t : spec.trims) {
        check_trim_mode(t);
      }
      const auto rows = cmd_sweep(cfg, spec);
      if (pick_format(cfg, "csv") == "csv") {
        emit(check_csv(rows), cfg, out, err);
      } else {
        std::string text = "[\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
          text += (i ? ",\n" : "") + check_json(rows[i]);
        }
        emit(text + "]\n", cfg, out, err);
      }
    } else if (*lss) {
      const std::string f = pick_format(cfg, "json");
      const LssReport r = cmd_lss(cfg);
      emit(f == "json" ? lss_json(r) : lss_csv(r), cfg, out, err);
    } else if (*mos) {
      const std::string f = pick_format(cfg, "csv");
      const MosReport r = cmd_validate_mos(cfg);
      emit(f == "json" ? mos_json(r) : mos_csv(r), cfg, out, err);
    } else if (*exp) {
      const LoadedModel m = load_model(cfg);
      const PreparedModel p = prepare(m, cfg);
      const ModelDocument doc = to_document(p.model, m.property, m.orders, {{"source", m.label}});
      const bool json = pick_format(cfg, "csv") == "json" ||
                        (cfg.format.empty() && cfg.out.size() >= 5 && cfg.out.ends_with(".json"));
      emit(json ? model_to_json(doc) : serialize_model(doc), cfg, out, err);
    } else {
      bool all = true;
      for (const auto & r : cmd_counterexamples()) {
        out << r.name << " " << num(r.first) << " " << num(r.second) << " expected " << num(r.expected_first) << " "
            << num(r.expected_second) << " " << (r.pass ? "PASS" : "FAIL") << "\n";
        all = all && r.pass;
      }
      return all ? kOk : kCheckFailed;
    }
  } catch (const CapExceeded & e) {
    err << "error: " << e.what() << "\n";
    out << "schedulers " << e.count() << "\n";
    return kCapExceeded;
  } catch (const NonConvergence & e) {
    err << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const ModelError & e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  } catch (const std::invalid_argument & e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  } catch (const std::out_of_range & e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  }
  return kOk;
}

}  // namespace mosprob::cli
