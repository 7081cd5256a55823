#include "distobs/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

namespace distobs {

using nlohmann::json;

namespace {

json one_based(const std::vector<int>& agents) {
  json out = json::array();
  for (int a : agents) out.push_back(a + 1);
  return out;
}

json modes_json(const std::vector<ModeId>& modes) {
  json out = json::array();
  for (const ModeId& id : modes) out.push_back(id.label());
  return out;
}

json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

// JSON has no infinities; open ends are written as null.
json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

ModeId parse_label(const std::string& label) {
  int l = 0;
  int h = 0;
  char tail = 0;
  if (std::sscanf(label.c_str(), "%d,%d%c", &l, &h, &tail) != 2 || l < 1 || h < 1) {
    throw ModelError(ModelError::Kind::kParse, "bad mode label \"" + label + "\", expected \"l,h\"");
  }
  return {l - 1, h - 1};
}

json parse_document(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError(ModelError::Kind::kParse, what + ": " + e.what());
  }
}

}  // namespace

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json analysis_json(const Problem& problem, const StructureAnalysis& structure) {
  const PlantModel& model = problem.model;
  json doc;
  doc["n"] = model.n();
  doc["m"] = model.m();
  doc["N"] = problem.sensors.N();

  json eigs = json::array();
  for (int l = 0; l < model.num_eigs(); ++l) {
    const EigenvalueSpec& e = model.eig(l);
    json dims = json::array();
    for (const MiniblockSpec& b : model.blocks_of(l)) dims.push_back(b.dim_units);
    eigs.push_back({{"index", l + 1},
                    {"file_index", model.eig_user_order()[l] + 1},
                    {"re", e.re()},
                    {"im", e.im()},
                    {"modulus", e.modulus()},
                    {"unstable", e.unstable()},
                    {"miniblock_dims", dims}});
  }
  doc["eigenvalues"] = eigs;

  json cls = json::array();
  for (const AgentClassification& c : structure.classifications) {
    json modes = json::array();
    for (const ModeId& id : model.unstable_modes()) {
      modes.push_back({{"mode", id.label()},
                       {"group", static_cast<int>(c.group(id))},
                       {"t", c.t_index(id)}});
    }
    cls.push_back({{"agent", c.agent() + 1}, {"modes", modes}});
  }
  doc["classification"] = cls;

  json sets = json::array();
  for (const auto& [id, s] : structure.sets) {
    sets.push_back({{"mode", id.label()},
                    {"V1", one_based(s.blind)},
                    {"V2", one_based(s.partial)},
                    {"V3", one_based(s.full)}});
  }
  doc["agent_sets"] = sets;

  const DetectabilityReport& joint = structure.assumptions.joint;
  json deficient = json::array();
  for (int l : joint.rank_deficient_eigs) deficient.push_back(l + 1);
  json indep = json::array();
  for (const IndependenceReport& r : structure.assumptions.independence) {
    indep.push_back({{"agent", r.agent + 1},
                     {"eigenvalue", r.eig + 1},
                     {"holds", r.holds},
                     {"rank", r.rank},
                     {"vectors", r.vectors}});
  }
  doc["assumptions"] = {{"holds", structure.assumptions.holds()},
                        {"joint_detectability",
                         {{"holds", joint.holds},
                          {"rank_deficient_eigenvalues", deficient},
                          {"unobserved_modes", modes_json(joint.unobserved_modes)},
                          {"failing_modes", modes_json(joint.failing_modes)}}},
                        {"independence", indep}};

  json agents = json::array();
  for (std::size_t i = 0; i < structure.subsystems.size(); ++i) {
    const DetectableSubsystem& sub = structure.subsystems[i];
    const ConsensusPartition& part = structure.partitions[i];
    agents.push_back({{"agent", sub.agent + 1},
                      {"detectable_dim", sub.dim()},
                      {"retained", one_based(sub.retained_index_map())},
                      {"consensus_modes", modes_json(part.modes)},
                      {"consensus_states", one_based(part.index_map)}});
  }
  doc["subsystems"] = agents;
  return doc;
}

std::string analysis_text(const Problem& problem, const StructureAnalysis& structure) {
  const PlantModel& model = problem.model;
  const std::vector<ModeId> modes = model.unstable_modes();
  std::ostringstream os;
  os << "n = " << model.n() << ", N = " << problem.sensors.N() << ", unstable eigenvalues = "
     << model.num_unstable() << "\n\n";

  os << "classification (1 blind, 2 partial with t, 3 full)\n";
  os << std::left << std::setw(8) << "agent";
  for (const ModeId& id : modes) os << std::setw(9) << ("(" + id.label() + ")");
  os << "\n";
  for (const AgentClassification& c : structure.classifications) {
    os << std::setw(8) << c.agent() + 1;
    for (const ModeId& id : modes) {
      std::string cell = std::to_string(static_cast<int>(c.group(id)));
      if (c.group(id) == MiniblockGroup::kPartial) cell += " t=" + std::to_string(c.t_index(id));
      os << std::setw(9) << cell;
    }
    os << "\n";
  }

  const auto set_text = [](const std::vector<int>& v) {
    std::string s;
    for (int a : v) s += (s.empty() ? "" : ",") + std::to_string(a + 1);
    return "{" + s + "}";
  };
  os << "\nagent sets\n";
  for (const auto& [id, s] : structure.sets) {
    os << "  (" << id.label() << ")  V1 = " << set_text(s.blind) << "  V2 = " << set_text(s.partial)
       << "  V3 = " << set_text(s.full) << "\n";
  }

  const DetectabilityReport& joint = structure.assumptions.joint;
  os << "\njoint detectability: " << (joint.holds ? "holds" : "FAILS") << "\n";
  for (const ModeId& id : joint.failing_modes) os << "  failing mode (" << id.label() << ")\n";
  bool independent = true;
  for (const IndependenceReport& r : structure.assumptions.independence) {
    if (r.holds) continue;
    independent = false;
    os << "  agent " << r.agent + 1 << ", eigenvalue " << r.eig + 1 << ": rank " << r.rank << " of "
       << r.vectors << "\n";
  }
  os << "column independence: " << (independent ? "holds" : "FAILS") << "\n";
  return os.str();
}

json interval_json(const FeasibleInterval& interval) {
  json constraints = json::array();
  for (const MuConstraint& c : interval.per_eigen) {
    json item = {{"mu", complex_json(c.mu)}, {"feasible", c.feasible}};
    if (c.feasible) {
      item["lower"] = c.lower;
      item["upper"] = c.upper;
    } else {
      item["reason"] = c.reason;
    }
    constraints.push_back(std::move(item));
  }
  return {{"rho", interval.rho},
          {"lower", bound(interval.lower)},
          {"upper", bound(interval.upper)},
          {"empty", interval.empty},
          {"unconstrained", interval.unconstrained},
          {"constraints", constraints}};
}

json forest_json(const ForestReport& forest) {
  return {{"reachable", forest.reachable}, {"orphaned", one_based(forest.orphaned)}};
}

json mode_design_json(const ModeDesign& d) {
  json spectrum = json::array();
  for (const auto& mu : d.spectrum) spectrum.push_back(complex_json(mu));
  return {{"mode", d.mode.label()},
          {"consensus_agents", one_based(d.consensus_agents)},
          {"reduced_laplacian", matrix_json(d.reduced)},
          {"reduced_spectrum", spectrum},
          {"interval", interval_json(d.interval)},
          {"forest", forest_json(d.forest)},
          {"gain", d.gain},
          {"radius", d.radius}};
}

json design_json(const GainPlan& plan) {
  json doc;
  doc["verified"] = plan.verified;
  json agents = json::array();
  for (std::size_t i = 0; i < plan.luenberger.size(); ++i) {
    agents.push_back({{"agent", static_cast<int>(i) + 1},
                      {"L", matrix_json(plan.luenberger[i])},
                      {"radius", i < plan.luenberger_radius.size() ? plan.luenberger_radius[i] : 0.0}});
  }
  doc["luenberger"] = agents;
  json gains = json::object();
  for (const auto& [id, k] : plan.coupling) gains[id.label()] = k;
  doc["gains"] = gains;
  json modes = json::array();
  for (const auto& [id, d] : plan.modes) modes.push_back(mode_design_json(d));
  doc["modes"] = modes;
  return doc;
}

std::string design_text(const GainPlan& plan) {
  std::ostringstream os;
  os << "mode     interval                  gain        radius\n";
  for (const auto& [id, d] : plan.modes) {
    std::string interval = d.interval.unconstrained
                               ? "unconstrained"
                               : "(" + fmt("%.4f", d.interval.lower) + ", " +
                                     fmt("%.4f", d.interval.upper) + ")";
    os << std::left << std::setw(9) << ("(" + id.label() + ")") << std::setw(26) << interval
       << std::setw(12) << fmt("%.6g", d.gain) << fmt("%.6g", d.radius) << "\n";
  }
  os << "\nLuenberger radii:";
  for (double r : plan.luenberger_radius) os << " " << fmt("%.6g", r);
  os << "\nverified: " << (plan.verified ? "yes" : "NO") << "\n";
  return os.str();
}

CouplingGains parse_gains(const std::string& json_text) {
  const json doc = parse_document(json_text, "gains file");
  if (!doc.is_object()) {
    throw ModelError(ModelError::Kind::kParse, "gains file: expected an object \"l,h\" -> k");
  }
  CouplingGains out;
  for (const auto& [label, value] : doc.items()) {
    if (!value.is_number()) {
      throw ModelError(ModelError::Kind::kParse, "gains file: value for \"" + label + "\" is not a number");
    }
    out[parse_label(label)] = value.get<double>();
  }
  return out;
}

GainPlan parse_plan(const std::string& json_text, const Problem& problem,
                    const StructureAnalysis& structure) {
  const json doc = parse_document(json_text, "plan file");
  if (!doc.is_object() || !doc.contains("luenberger") || !doc.contains("gains")) {
    throw ModelError(ModelError::Kind::kParse, "plan file: expected \"luenberger\" and \"gains\"");
  }
  GainPlan plan;
  const json& agents = doc["luenberger"];
  if (!agents.is_array() || static_cast<int>(agents.size()) != problem.sensors.N()) {
    throw ModelError(ModelError::Kind::kDimension, "plan file: need one Luenberger gain per agent");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const DetectableSubsystem& sub = structure.subsystems.at(i);
    const json& rows = agents[i].at("L");
    Eigen::MatrixXd L(sub.F.rows(), sub.H.rows());
    if (static_cast<Eigen::Index>(rows.size()) != L.rows()) {
      throw ModelError(ModelError::Kind::kDimension,
                       "plan file: agent " + std::to_string(i + 1) + " gain has wrong row count");
    }
    for (Eigen::Index r = 0; r < L.rows(); ++r) {
      if (static_cast<Eigen::Index>(rows[r].size()) != L.cols()) {
        throw ModelError(ModelError::Kind::kDimension,
                         "plan file: agent " + std::to_string(i + 1) + " gain has wrong column count");
      }
      for (Eigen::Index c = 0; c < L.cols(); ++c) L(r, c) = rows[r][c].get<double>();
    }
    plan.luenberger.push_back(std::move(L));
  }
  plan.coupling = parse_gains(doc["gains"].dump());
  for (const ModeId& id : problem.model.unstable_modes()) {
    if (!plan.coupling.contains(id)) {
      throw ModelError(ModelError::Kind::kParse, "plan file: no gain for mode (" + id.label() + ")");
    }
  }
  verify_plan(plan, problem.model, problem.graph, structure);
  return plan;
}

Eigen::MatrixXd original_error_norms(const SimulationTrace& trace) {
  if (!trace.transform) return trace.err_norm;
  Eigen::MatrixXd out(trace.err_norm.rows(), trace.err_norm.cols());
  for (Eigen::Index t = 0; t < out.rows(); ++t) {
    for (int i = 0; i < trace.N; ++i) {
      out(t, i) = (*trace.transform * trace.error(static_cast<int>(t), i)).norm();
    }
  }
  return out;
}

void write_trace_csv(std::ostream& os, const SimulationTrace& trace,
                     const Eigen::MatrixXd& err_norm) {
  os << "t,agent,err_norm";
  for (const ModeId& id : trace.modes) os << ",err_mode_" << id.eig + 1 << "_" << id.block + 1;
  os << "\n";
  for (Eigen::Index t = 0; t < err_norm.rows(); ++t) {
    for (int i = 0; i < trace.N; ++i) {
      os << t << "," << i + 1 << "," << fmt("%.17g", err_norm(t, i));
      const Eigen::MatrixXd& modes = trace.mode_err[t];
      for (Eigen::Index m = 0; m < modes.cols(); ++m) os << "," << fmt("%.17g", modes(i, m));
      os << "\n";
    }
  }
}

std::string trace_svg(const SimulationTrace& trace, int agent, const PlotOptions& options) {
  constexpr double kWidth = 720;
  constexpr double kHeight = 360;
  constexpr double kMargin = 48;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b"};

  std::vector<int> entries = options.entries;
  if (entries.empty()) {
    for (int k = 0; k < std::min(trace.n, 2); ++k) entries.push_back(k);
  }
  const int steps = static_cast<int>(trace.x.size());
  const int stride = std::max(1, (steps + options.max_points - 1) / std::max(1, options.max_points));

  std::vector<Eigen::VectorXd> truth;
  std::vector<Eigen::VectorXd> est;
  std::vector<int> times;
  for (int t = 0; t < steps; t += stride) times.push_back(t);
  if (times.back() != steps - 1) times.push_back(steps - 1);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int t : times) {
    truth.push_back(options.original_coords ? trace.original_state(t) : trace.x[t]);
    est.push_back(options.original_coords ? trace.original_estimate(t, agent)
                                          : trace.estimates[t][agent]);
    for (int k : entries) {
      lo = std::min({lo, truth.back()(k), est.back()(k)});
      hi = std::max({hi, truth.back()(k), est.back()(k)});
    }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double t_max = std::max(1, steps - 1);
  const auto px = [&](int t) { return kMargin + (kWidth - 2 * kMargin) * t / t_max; };
  const auto py = [&](double v) {
    return kHeight - kMargin - (kHeight - 2 * kMargin) * (v - lo) / (hi - lo);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kMargin << "\" y=\"20\">agent " << agent + 1 << " ("
     << (options.original_coords ? "original" : "Jordan") << " coordinates)</text>\n";
  os << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin
     << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
     << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  os << "<text x=\"4\" y=\"" << kMargin << "\">" << fmt("%.3g", hi) << "</text>\n";
  os << "<text x=\"4\" y=\"" << kHeight - kMargin << "\">" << fmt("%.3g", lo) << "</text>\n";
  os << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\">t = "
     << steps - 1 << "</text>\n";
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const char* color = kColors[e % std::size(kColors)];
    for (int pass = 0; pass < 2; ++pass) {
      const auto& series = pass == 0 ? truth : est;
      os << "<polyline fill=\"none\" stroke=\"" << color << "\""
         << (pass == 1 ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      for (std::size_t p = 0; p < times.size(); ++p) {
        os << (p ? " " : "") << fmt("%.2f", px(times[p])) << "," << fmt("%.2f", py(series[p](entries[e])));
      }
      os << "\"/>\n";
    }
    os << "<text x=\"" << kWidth - kMargin - 120 << "\" y=\"" << 20 + 14 * e << "\" fill=\"" << color
       << "\">x" << entries[e] + 1 << " / estimate</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

json metrics_json(const ErrorMetrics& metrics, int horizon, bool original_coords) {
  json agents = json::array();
  for (std::size_t i = 0; i < metrics.final_norm.size(); ++i) {
    agents.push_back({{"agent", static_cast<int>(i) + 1},
                      {"initial_norm", metrics.initial_norm[i]},
                      {"final_norm", metrics.final_norm[i]},
                      {"peak_norm", metrics.peak_norm[i]},
                      {"decay_rate", metrics.decay_rate[i]}});
  }
  return {{"horizon", horizon},
          {"coordinates", original_coords ? "original" : "jordan"},
          {"agents", agents},
          {"total",
           {{"initial_norm", metrics.total_initial},
            {"final_norm", metrics.total_final},
            {"decay_rate", metrics.total_decay_rate}}}};
}

}  // namespace distobs
