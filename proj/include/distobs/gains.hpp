#pragma once

#include <complex>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "distobs/linalg.hpp"
#include "distobs/model.hpp"
#include "distobs/structure.hpp"

namespace distobs {

/// Admissible k for one reduced-Laplacian eigenvalue μ: |1 - kμ| < 1/ρ.
struct MuConstraint {
  std::complex<double> mu;
  bool feasible = false;
  double lower = 0.0;
  double upper = 0.0;
  std::string reason;  // empty when feasible
};

/// Open interval of coupling gains k that make (I - k L_red) ⊗ A_block Schur.
struct FeasibleInterval {
  double rho = 1.0;
  double lower = 0.0;
  double upper = 0.0;
  bool empty = false;
  // The mode needs no consensus (every agent observes it fully).
  bool unconstrained = false;
  std::vector<MuConstraint> per_eigen;

  bool contains(double k) const {
    return unconstrained || (!empty && lower < k && k < upper);
  }
  double midpoint() const { return 0.5 * (lower + upper); }
};

/// Intersects the per-μ quadratic constraints |μ|²k² - 2Re(μ)k + 1 - 1/ρ² < 0.
/// Throws std::invalid_argument if rho < 1.
FeasibleInterval feasible_interval(double rho, std::span<const std::complex<double>> spectrum);

/// Principal submatrix of L on the agents not in `full` (original order).
Eigen::MatrixXd reduced_laplacian(const Eigen::MatrixXd& L, std::span<const int> full);
/// Agents in [0, N) not listed in `full`, ascending.
std::vector<int> complement(int N, std::span<const int> full);

struct ForestReport {
  bool reachable = true;
  std::vector<int> orphaned;
};

/// Whether every agent outside `roots` is reachable from `roots` along
/// communication edges j -> i ([adjacency]_{i,j} > 0).
ForestReport spanning_forest_diagnostic(const CommGraph& graph, std::span<const int> roots);

using CouplingGains = std::map<ModeId, double>;

struct InfeasibleMode {
  ModeId mode;
  FeasibleInterval interval;
  ForestReport forest;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, std::vector<InfeasibleMode> modes)
      : std::runtime_error(what), modes_(std::move(modes)) {}

  const std::vector<InfeasibleMode>& modes() const { return modes_; }

 private:
  std::vector<InfeasibleMode> modes_;
};

/// A user-supplied gain outside its open interval, or for an unknown mode.
class GainRangeError : public std::runtime_error {
 public:
  GainRangeError(const std::string& what, ModeId mode)
      : std::runtime_error(what), mode_(mode) {}

  ModeId mode() const { return mode_; }

 private:
  ModeId mode_;
};

/// Midpoint of every interval, with `user` entries replacing the midpoint
/// after a strict-interior check. Unconstrained modes get k = 0.
CouplingGains pick_coupling_gains(const std::map<ModeId, FeasibleInterval>& intervals,
                                  const CouplingGains& user = {});

class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// L = F P Hᵀ (H P Hᵀ + I)⁻¹ with P the limit of the filter Riccati recursion
/// (Q = I, R = I) started at P = I. Throws DesignError when the recursion
/// stalls or ρ(F - L H) is not below 1 - kSchurMargin.
Eigen::MatrixXd design_output_injection(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H);

/// (I - k L_red) ⊗ A_block.
Eigen::MatrixXd mode_error_matrix(double k, const Eigen::MatrixXd& reduced,
                                  const Eigen::MatrixXd& block);

struct KronSpectrumReport {
  std::vector<std::complex<double>> products;
  std::vector<std::complex<double>> direct;
  double max_mismatch = 0.0;
};

/// Compares {(1 - kμ)λ} against the eigenvalues of mode_error_matrix.
KronSpectrumReport kron_spectrum_check(double k, const Eigen::MatrixXd& reduced,
                                       const Eigen::MatrixXd& block);

struct ModeDesign {
  ModeId mode;
  std::vector<int> consensus_agents;  // V1 ∪ V2, ascending
  Eigen::MatrixXd reduced;
  std::vector<std::complex<double>> spectrum;
  FeasibleInterval interval;
  ForestReport forest;
  double gain = 0.0;
  double radius = 0.0;  // ρ((I - k L_red) ⊗ A_block)
};

struct GainPlan {
  std::vector<Eigen::MatrixXd> luenberger;
  std::vector<double> luenberger_radius;
  CouplingGains coupling;
  std::map<ModeId, ModeDesign> modes;
  bool verified = false;

  double gain(ModeId id) const;
};

/// Per-mode intervals (no gain selection yet). Used by design_gains and by
/// diagnostics that only need the feasibility picture.
std::map<ModeId, ModeDesign> analyze_modes(const PlantModel& model, const CommGraph& graph,
                                           const ModeAgentSets& sets);

/// Full synthesis: Luenberger gains for every agent, coupling gains for every
/// unstable mode, and verification of every error matrix. Throws
/// InfeasibleError (with forest diagnostics), GainRangeError or DesignError.
GainPlan design_gains(const PlantModel& model, const CommGraph& graph,
                      const StructureAnalysis& structure, const CouplingGains& user = {});

/// Recomputes every radius of an existing plan (used for plans read from disk).
void verify_plan(GainPlan& plan, const PlantModel& model, const CommGraph& graph,
                 const StructureAnalysis& structure);

}  // namespace distobs
