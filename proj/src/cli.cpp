#include "distobs/cli.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "distobs/gains.hpp"
#include "distobs/model.hpp"
#include "distobs/report.hpp"
#include "distobs/sim.hpp"
#include "distobs/structure.hpp"

namespace distobs {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string command;
  std::string model;
  std::string out = "distobs_out";
  std::string gains;
  std::string plan;
  std::optional<int> horizon;
  std::optional<std::uint64_t> seed;
  bool original_coords = false;
  bool serial = false;
  bool no_plots = false;
};

// A classified failure on its way to failure.json.
class CommandFailure : public std::runtime_error {
 public:
  CommandFailure(int code, std::string kind, const std::string& what, json details = json::object())
      : std::runtime_error(what), code_(code), kind_(std::move(kind)), details_(std::move(details)) {}

  int code() const { return code_; }
  const std::string& kind() const { return kind_; }
  const json& details() const { return details_; }

 private:
  int code_;
  std::string kind_;
  json details_;
};

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}

  void write(const fs::path& relative, const std::string& content) {
    const fs::path path = root_ / relative;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream file(path, std::ios::binary);
    file << content;
    if (!file) {
      throw CommandFailure(kExitInvalid, "io_error", "cannot write " + path.string());
    }
    paths_.push_back(path);
    names_.push_back(relative.generic_string());
  }

  const std::vector<fs::path>& paths() const { return paths_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  fs::path root_;
  std::vector<fs::path> paths_;
  std::vector<std::string> names_;
};

std::string read_file(const std::string& path, const std::string& what) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw CommandFailure(kExitInvalid, "missing_file", "cannot read " + what + " " + path);
  std::ostringstream ss;
  ss << file.rdbuf();
  return ss.str();
}

json modes_of(const std::vector<ModeId>& modes) {
  json out = json::array();
  for (const ModeId& id : modes) out.push_back(id.label());
  return out;
}

void require_assumptions(const StructureAnalysis& s) {
  if (s.assumptions.holds()) return;
  json agents = json::array();
  json eigs = json::array();
  for (const IndependenceReport& r : s.assumptions.independence) {
    if (r.holds) continue;
    agents.push_back(r.agent + 1);
    eigs.push_back(r.eig + 1);
  }
  json details = {{"failing_modes", modes_of(s.assumptions.joint.failing_modes)},
                  {"joint_detectability", s.assumptions.joint.holds},
                  {"independence_failures", {{"agents", agents}, {"eigenvalues", eigs}}}};
  std::string what = "assumptions fail:";
  if (!s.assumptions.joint.holds) what += " stacked sensors are not detectable;";
  if (!agents.empty()) what += " column independence fails for some agents;";
  what.pop_back();
  throw CommandFailure(kExitAssumptions, "assumptions", what, std::move(details));
}

struct Pipeline {
  Problem problem;
  StructureAnalysis structure;
};

Pipeline load(const Options& opt) {
  const std::string text = read_file(opt.model, "model file");
  Pipeline p{parse_model(text), {}};
  if (opt.horizon) p.problem.sim.horizon = *opt.horizon;
  if (opt.seed) p.problem.sim.seed = *opt.seed;
  if (opt.original_coords && !p.problem.model.transform()) {
    throw CommandFailure(kExitInvalid, "usage", "--original-coords needs a model with a transform");
  }
  p.structure = analyze_structure(p.problem.model, p.problem.sensors);
  return p;
}

GainPlan design(const Options& opt, const Pipeline& p) {
  require_assumptions(p.structure);
  CouplingGains user;
  if (!opt.gains.empty()) user = parse_gains(read_file(opt.gains, "gains file"));
  return design_gains(p.problem.model, p.problem.graph, p.structure, user);
}

json simulate(const Options& opt, const Pipeline& p, const GainPlan& plan, OutputDir& dir) {
  RunOptions run_opts;
  run_opts.execution = opt.serial ? Execution::kSerial : Execution::kParallel;
  // A loaded plan may hold deliberately bad gains; let the overflow guard
  // report the divergence instead of refusing to run.
  run_opts.require_verified = opt.plan.empty();
  const SimulationTrace trace = run(p.problem.model, p.problem.sensors, p.problem.graph,
                                    p.structure, plan, p.problem.sim, run_opts);

  const Eigen::MatrixXd norms = opt.original_coords ? original_error_norms(trace) : trace.err_norm;
  std::ostringstream csv;
  write_trace_csv(csv, trace, norms);
  dir.write("trace.csv", csv.str());
  if (!opt.no_plots) {
    PlotOptions plot;
    plot.original_coords = opt.original_coords;
    for (int i = 0; i < trace.N; ++i) {
      dir.write("plots/agent_" + std::to_string(i + 1) + ".svg", trace_svg(trace, i, plot));
    }
  }
  json metrics = metrics_json(error_metrics(norms), trace.horizon, opt.original_coords);
  dir.write("metrics.json", metrics.dump(2) + "\n");
  return metrics;
}

GainPlan obtain_plan(const Options& opt, const Pipeline& p) {
  if (opt.plan.empty()) return design(opt, p);
  require_assumptions(p.structure);
  return parse_plan(read_file(opt.plan, "plan file"), p.problem, p.structure);
}

void execute(const Options& opt, OutputDir& dir, std::ostream& out) {
  const Pipeline p = load(opt);

  if (opt.command == "analyze") {
    dir.write("analysis.json", analysis_json(p.problem, p.structure).dump(2) + "\n");
    out << analysis_text(p.problem, p.structure);
    require_assumptions(p.structure);
    return;
  }
  if (opt.command == "design") {
    const GainPlan plan = design(opt, p);
    dir.write("design.json", design_json(plan).dump(2) + "\n");
    out << design_text(plan);
    return;
  }
  if (opt.command == "simulate") {
    const GainPlan plan = obtain_plan(opt, p);
    const json metrics = simulate(opt, p, plan, dir);
    out << "total error " << metrics["total"]["initial_norm"].get<double>() << " -> "
        << metrics["total"]["final_norm"].get<double>() << " over " << p.problem.sim.horizon
        << " steps\n";
    return;
  }

  // report: every artifact plus one bundle document.
  const json analysis = analysis_json(p.problem, p.structure);
  dir.write("analysis.json", analysis.dump(2) + "\n");
  dir.write("analysis.txt", analysis_text(p.problem, p.structure));
  const GainPlan plan = obtain_plan(opt, p);
  const json gains = design_json(plan);
  dir.write("design.json", gains.dump(2) + "\n");
  dir.write("design.txt", design_text(plan));
  const json metrics = simulate(opt, p, plan, dir);
  json files = dir.names();
  files.push_back("report.json");
  const json bundle = {{"analysis", analysis}, {"design", gains}, {"metrics", metrics},
                       {"files", files}};
  dir.write("report.json", bundle.dump(2) + "\n");
  out << "wrote " << files.size() << " files to " << opt.out << "\n";
}

CommandFailure classify(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const CommandFailure& e) {
    return e;
  } catch (const ModelError& e) {
    return {kExitInvalid, "model_invalid", e.what()};
  } catch (const AssumptionError& e) {
    return {kExitAssumptions, "assumptions", e.what()};
  } catch (const InfeasibleError& e) {
    json modes = json::array();
    json orphaned = json::array();
    for (const InfeasibleMode& m : e.modes()) {
      modes.push_back({{"mode", m.mode.label()},
                       {"interval", interval_json(m.interval)},
                       {"forest", forest_json(m.forest)}});
      for (int a : m.forest.orphaned) {
        if (std::find(orphaned.begin(), orphaned.end(), a + 1) == orphaned.end()) orphaned.push_back(a + 1);
      }
    }
    std::sort(orphaned.begin(), orphaned.end());
    return {kExitInfeasible, "infeasible", e.what(), {{"modes", modes}, {"orphaned_agents", orphaned}}};
  } catch (const GainRangeError& e) {
    return {kExitInvalid, "gain_out_of_range", e.what(), {{"mode", e.mode().label()}}};
  } catch (const DesignError& e) {
    return {kExitAssumptions, "design_failed", e.what()};
  } catch (const SimulationDiverged& e) {
    json agent = e.agent() < 0 ? json("plant") : json(e.agent() + 1);
    return {kExitDiverged, "diverged", e.what(), {{"step", e.step()}, {"agent", agent}}};
  } catch (const std::exception& e) {
    return {kExitInvalid, "error", e.what()};
  }
}

// Output directory for a failure report when parsing never got that far.
std::string scan_out_flag(const std::vector<std::string>& args, const std::string& fallback) {
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--out" && k + 1 < args.size()) return args[k + 1];
    if (args[k].rfind("--out=", 0) == 0) return args[k].substr(6);
  }
  return fallback;
}

void add_common(CLI::App* sub, Options& opt) {
  sub->add_option("model", opt.model, "Model file (JSON)")->required();
  sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
}

void add_gains(CLI::App* sub, Options& opt) {
  sub->add_option("--gains", opt.gains, "JSON object mapping \"l,h\" to a coupling gain");
}

void add_sim(CLI::App* sub, Options& opt) {
  sub->add_option("--plan", opt.plan, "Gain plan (a design.json) to use instead of designing");
  sub->add_option("--horizon", opt.horizon, "Simulation steps (overrides the model file)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", opt.seed, "Seed for random observer initialization");
  sub->add_flag("--original-coords", opt.original_coords,
                "Report errors and plots in original coordinates (x = T z)");
  sub->add_flag("--serial", opt.serial, "Use the serial reference kernel");
  sub->add_flag("--no-plots", opt.no_plots, "Skip the per-agent SVG plots");
}

}  // namespace

CommandOutcome run_command(const std::vector<std::string>& args, std::ostream& out,
                           std::ostream& err) {
  Options opt;
  CLI::App app{"Distributed observer design and simulation over a sensor network", "distobs"};
  app.require_subcommand(1, 1);

  CLI::App* analyze = app.add_subcommand("analyze", "Classify miniblocks and check assumptions");
  CLI::App* design_cmd = app.add_subcommand("design", "Compute gain intervals and gains");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Design (or load) gains and simulate");
  CLI::App* report = app.add_subcommand("report", "Write every artifact and a bundle report");
  add_common(analyze, opt);
  for (CLI::App* sub : {design_cmd, simulate_cmd, report}) {
    add_common(sub, opt);
    add_gains(sub, opt);
  }
  add_sim(simulate_cmd, opt);
  add_sim(report, opt);

  CommandOutcome outcome;
  OutputDir* dir_ptr = nullptr;
  std::optional<OutputDir> dir;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (CLI::App* sub : app.get_subcommands()) opt.command = sub->get_name();
    dir.emplace(opt.out);
    dir_ptr = &*dir;
    execute(opt, *dir_ptr, out);
    outcome.report_paths = dir_ptr->paths();
    return outcome;
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return outcome;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    if (!dir) dir.emplace(scan_out_flag(args, opt.out));
    dir_ptr = &*dir;
    outcome.exit_code = kExitInvalid;
    json failure = {{"exit_code", kExitInvalid}, {"kind", "usage"}, {"message", e.what()}};
    try {
      dir_ptr->write("failure.json", failure.dump(2) + "\n");
    } catch (const std::exception&) {
    }
    outcome.report_paths = dir_ptr->paths();
    return outcome;
  } catch (...) {
    const CommandFailure f = classify(std::current_exception());
    if (!dir) dir.emplace(opt.out);
    dir_ptr = &*dir;
    outcome.exit_code = f.code();
    err << "distobs " << opt.command << ": " << f.what() << "\n";
    if (f.kind() == "missing_file" || f.kind() == "usage") err << app.help();
    json failure = {{"exit_code", f.code()},
                    {"command", opt.command},
                    {"kind", f.kind()},
                    {"message", f.what()},
                    {"details", f.details()}};
    try {
      dir_ptr->write("failure.json", failure.dump(2) + "\n");
    } catch (const std::exception&) {
      err << "could not write failure report under " << opt.out << "\n";
    }
    outcome.report_paths = dir_ptr->paths();
    return outcome;
  }
}

}  // namespace distobs
