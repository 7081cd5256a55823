#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distobs/gains.hpp"
#include "distobs/model.hpp"
#include "distobs/structure.hpp"

namespace distobs {

/// Error norms above this abort a run.
inline constexpr double kOverflowNorm = 1e12;

/// x(t+1) = A x(t) + B u(t).
Eigen::VectorXd step_plant(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const PlantModel& model);

/// ẑ(t+1) = F ẑ + G u + L (y - H ẑ).
Eigen::VectorXd step_local_observer(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& u, const DetectableSubsystem& sub,
                                    const Eigen::MatrixXd& L);

/// Per-miniblock consensus update of x̂_u for `agent`:
///   x̂ᵇ(t+1) = Aᵇ x̂ᵇ + Bᵇ u + k Aᵇ Σ_j a_ij (x̂_jᵇ - x̂ᵇ)
/// `estimates` holds every agent's assembled time-t estimate (Jordan
/// coordinates); neighbor blocks are read through global indices, whichever
/// half of the neighbor produced them.
Eigen::VectorXd step_consensus_layer(int agent, const Eigen::VectorXd& x_u,
                                     std::span<const Eigen::VectorXd> estimates,
                                     const Eigen::VectorXd& u, const ConsensusPartition& part,
                                     const CouplingGains& gains, const CommGraph& graph);

/// Scatters x̂_d = [0 I] ẑ and x̂_u into an n-vector.
Eigen::VectorXd assemble_estimate(const Eigen::VectorXd& z, const Eigen::VectorXd& x_u,
                                  const DetectableSubsystem& sub, const ConsensusPartition& part,
                                  int n);

class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, int step, int agent)
      : std::runtime_error(what), step_(step), agent_(agent) {}

  int step() const { return step_; }
  int agent() const { return agent_; }  // -1 for the plant itself

 private:
  int step_;
  int agent_;
};

struct SimulationTrace {
  int n = 0;
  int N = 0;
  int horizon = 0;
  std::vector<ModeId> modes;  // every miniblock, in state order
  std::vector<Eigen::VectorXd> x;                       // [t]
  std::vector<std::vector<Eigen::VectorXd>> estimates;  // [t][agent]
  Eigen::MatrixXd err_norm;                             // (horizon+1) x N
  std::vector<Eigen::MatrixXd> mode_err;                // [t] is N x modes
  std::optional<Eigen::MatrixXd> transform;

  Eigen::VectorXd error(int t, int agent) const { return x[t] - estimates[t][agent]; }
  /// Total error norm over all agents at step t.
  double total_error(int t) const { return err_norm.row(t).norm(); }
  /// T x(t), or x(t) when the model has no transform.
  Eigen::VectorXd original_state(int t) const;
  Eigen::VectorXd original_estimate(int t, int agent) const;
};

enum class Execution { kSerial, kParallel };

struct RunOptions {
  Execution execution = Execution::kParallel;
  // Refuse plans whose error matrices are not all Schur.
  bool require_verified = true;
};

/// Lock-step simulation of the plant and all N observers over config.horizon
/// steps. Every agent updates from the same time-t snapshot, so serial and
/// parallel execution produce bit-identical traces.
SimulationTrace run(const PlantModel& model, const SensorSuite& sensors, const CommGraph& graph,
                    const StructureAnalysis& structure, const GainPlan& plan,
                    const SimConfig& config, RunOptions options = {});

struct ErrorMetrics {
  std::vector<double> initial_norm;
  std::vector<double> final_norm;
  std::vector<double> peak_norm;
  std::vector<double> decay_rate;
  double total_initial = 0.0;
  double total_final = 0.0;
  double total_decay_rate = 0.0;
};

/// Geometric-mean step ratio over the trailing half of `norms`; 0 when the
/// window starts at zero.
double decay_rate(std::span<const double> norms);

ErrorMetrics error_metrics(const SimulationTrace& trace);
/// Same summary from a (steps x agents) matrix of error norms.
ErrorMetrics error_metrics(const Eigen::MatrixXd& err_norm);

}  // namespace distobs
