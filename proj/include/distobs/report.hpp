#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "distobs/gains.hpp"
#include "distobs/model.hpp"
#include "distobs/sim.hpp"
#include "distobs/structure.hpp"

namespace distobs {

// Machine-readable reports. Agents, eigenvalues and miniblocks are one-based
// in every document; mode labels are "l,h" in the model's sorted eigenvalue
// order (unstable first).

nlohmann::json matrix_json(const Eigen::MatrixXd& M);
nlohmann::json analysis_json(const Problem& problem, const StructureAnalysis& structure);
/// Agent x mode classification grid followed by the agent sets and the
/// assumption checks.
std::string analysis_text(const Problem& problem, const StructureAnalysis& structure);

nlohmann::json mode_design_json(const ModeDesign& design);
nlohmann::json interval_json(const FeasibleInterval& interval);
nlohmann::json forest_json(const ForestReport& forest);
nlohmann::json design_json(const GainPlan& plan);
std::string design_text(const GainPlan& plan);

/// Reads a gains override file: a JSON object mapping "l,h" to k.
/// Throws ModelError on malformed input.
CouplingGains parse_gains(const std::string& json_text);

/// Rebuilds a plan from a document written by design_json and re-verifies it
/// against the problem. Throws ModelError if shapes do not match.
GainPlan parse_plan(const std::string& json_text, const Problem& problem,
                    const StructureAnalysis& structure);

/// Per-step, per-agent error norms of T e (original coordinates).
Eigen::MatrixXd original_error_norms(const SimulationTrace& trace);

/// One row per (t, agent): t, agent, err_norm, then one column per miniblock.
/// `err_norm` overrides the norm column (e.g. original_error_norms); mode
/// columns are always Jordan-coordinate norms.
void write_trace_csv(std::ostream& os, const SimulationTrace& trace,
                     const Eigen::MatrixXd& err_norm);

struct PlotOptions {
  // State entries to draw (zero-based). Empty means the first two.
  std::vector<int> entries;
  bool original_coords = false;
  int max_points = 1000;
};

/// Line plot of the selected true state entries (solid) against the agent's
/// estimates (dashed).
std::string trace_svg(const SimulationTrace& trace, int agent, const PlotOptions& options);

nlohmann::json metrics_json(const ErrorMetrics& metrics, int horizon, bool original_coords);

}  // namespace distobs
