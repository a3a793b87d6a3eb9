// Command line front end: run one scenario, run a suite, or validate a
// config file. Exit codes: 0 success, 2 task failure, 3 safety violation
// (minimum distance went negative), 4 configuration error.

#include <wbc/wbc.hpp>

#include <CLI11.hpp>

#include <future>
#include <iostream>

namespace {

namespace fs = std::filesystem;

fs::path scenario_dir() {
#ifdef WBC_SCENARIO_DIR
  return fs::path(WBC_SCENARIO_DIR);
#else
  return fs::current_path() / "scenarios";
#endif
}

/// A scenario argument is either a path to a file or the name of a bundled
/// scenario (resolved as <scenario_dir>/<name>.json).
fs::path resolve_scenario(const std::string& arg) {
  if (fs::exists(arg)) return fs::path(arg);
  const fs::path bundled = scenario_dir() / (arg + ".json");
  if (fs::exists(bundled)) return bundled;
  throw wbc::ConfigError("scenario '" + arg + "' is neither a file nor a bundled name");
}

struct RunOutcome {
  wbc::RunSummary summary;
  int exit_code = 0;
};

RunOutcome execute(const wbc::ScenarioConfig& cfg, const fs::path& out_dir,
                   bool write_files) {
  wbc::RunResult result = wbc::run_scenario(cfg.to_run_config());
  result.summary.param_hash = wbc::parameter_hash(cfg);
  if (write_files) wbc::write_run_outputs(out_dir, cfg.robot, result);
  RunOutcome out;
  out.summary = result.summary;
  if (result.summary.min_dist < 0.0)
    out.exit_code = 3;
  else if (!result.summary.success)
    out.exit_code = 2;
  return out;
}

struct SweepSpec {
  std::vector<std::string> keys;
  std::vector<std::string> values;  // raw strings, applied via apply_override
};

SweepSpec parse_sweep(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= arg.size())
    throw wbc::ConfigError("--sweep expects key[,key...]=v1,v2,...");
  SweepSpec spec;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    size_t from = 0;
    while (true) {
      const auto comma = s.find(',', from);
      out.push_back(s.substr(from, comma - from));
      if (comma == std::string::npos) break;
      from = comma + 1;
    }
    return out;
  };
  spec.keys = split(arg.substr(0, eq));
  spec.values = split(arg.substr(eq + 1));
  for (const auto& k : spec.keys)
    if (k.empty()) throw wbc::ConfigError("--sweep: empty key");
  for (const auto& v : spec.values)
    if (v.empty()) throw wbc::ConfigError("--sweep: empty value");
  return spec;
}

int cmd_run(const std::string& scenario_arg, const std::string& mode,
            const std::vector<std::string>& sets, const std::string& out_arg) {
  wbc::ScenarioConfig cfg = wbc::load_scenario_file(resolve_scenario(scenario_arg));
  if (!mode.empty()) cfg.params.mode = wbc::control_mode_from_string(mode);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw wbc::ConfigError("--set expects key=value");
    wbc::apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  fs::path out_dir = out_arg.empty()
                         ? (cfg.out_dir.empty() ? fs::path("out") : fs::path(cfg.out_dir))
                         : fs::path(out_arg);
  const RunOutcome outcome = execute(cfg, out_dir, true);
  wbc::write_summary(std::cout, outcome.summary);
  return outcome.exit_code;
}

int cmd_suite(const std::string& list_arg, const std::string& sweep_arg,
              const std::string& out_arg, int jobs) {
  const fs::path list_path = fs::path(list_arg);
  if (!fs::exists(list_path)) throw wbc::ConfigError("cannot open " + list_arg);
  const wbc::SuiteConfig suite = wbc::load_suite_file(list_path);
  const fs::path base_dir = list_path.parent_path();

  // Every (scenario, mode, sweep value) triple becomes one run. Configs are
  // fully built and validated up front so config errors surface before any
  // simulation starts.
  std::vector<wbc::ScenarioConfig> runs;
  std::optional<SweepSpec> sweep;
  if (!sweep_arg.empty()) sweep = parse_sweep(sweep_arg);
  for (const std::string& entry : suite.scenarios) {
    fs::path path;
    if (fs::exists(base_dir / entry))
      path = base_dir / entry;
    else
      path = resolve_scenario(entry);
    const wbc::ScenarioConfig base = wbc::load_scenario_file(path);
    for (wbc::ControlMode m : suite.modes) {
      wbc::ScenarioConfig cfg = base;
      cfg.params.mode = m;
      if (!sweep) {
        runs.push_back(cfg);
        continue;
      }
      for (const std::string& v : sweep->values) {
        wbc::ScenarioConfig swept = cfg;
        for (const std::string& k : sweep->keys) wbc::apply_override(swept, k, v);
        runs.push_back(std::move(swept));
      }
    }
  }

  const fs::path out_dir = out_arg.empty() ? fs::path("out") : fs::path(out_arg);
  fs::create_directories(out_dir);

  // Independent worlds, so runs execute in parallel; the table keeps
  // submission order regardless of completion order.
  if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs <= 0) jobs = 1;
  std::vector<RunOutcome> outcomes(runs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      outcomes[i] = execute(runs[i], out_dir, true);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < std::min<int>(jobs, static_cast<int>(runs.size())); ++i)
    pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream table;
  table << wbc::aggregate_csv_header() << "\n";
  int exit_code = 0;
  for (const RunOutcome& o : outcomes) {
    wbc::append_aggregate_row(table, o.summary);
    exit_code = std::max(exit_code, o.exit_code);
  }
  {
    std::ofstream os(out_dir / "aggregate.csv");
    if (!os) throw std::runtime_error("cannot write aggregate table");
    os << table.str();
  }
  std::cout << table.str();
  return exit_code;
}

int cmd_validate(const std::string& scenario_arg) {
  const wbc::ScenarioConfig cfg = wbc::load_scenario_file(resolve_scenario(scenario_arg));
  std::cout << "ok name=" << cfg.name << " param_hash=" << wbc::parameter_hash(cfg)
            << " obstacles=" << cfg.obstacles.size() << " goals=" << cfg.goals.size()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Whole-body reactive velocity controller scenario harness"};
  app.require_subcommand(1);

  std::string scenario_arg, mode_arg, out_arg, list_arg, sweep_arg;
  std::vector<std::string> set_args;
  int jobs = 0;

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--scenario", scenario_arg, "Scenario file or bundled name")->required();
  run->add_option("--mode", mode_arg, "Controller mode (sewb, cbf-only, unconstrained)");
  run->add_option("--set", set_args, "Parameter override key=value");
  run->add_option("--out", out_arg, "Output directory");

  CLI::App* suite = app.add_subcommand("suite", "Run a scenario suite");
  suite->add_option("--list", list_arg, "Suite file")->required();
  suite->add_option("--sweep", sweep_arg, "Sweep key[,key...]=v1,v2,...");
  suite->add_option("--out", out_arg, "Output directory");
  suite->add_option("--jobs", jobs, "Parallel runs (default: hardware threads)");

  CLI::App* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("--scenario", scenario_arg, "Scenario file or bundled name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_arg, mode_arg, set_args, out_arg);
    if (suite->parsed()) return cmd_suite(list_arg, sweep_arg, out_arg, jobs);
    if (validate->parsed()) return cmd_validate(scenario_arg);
  } catch (const wbc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
