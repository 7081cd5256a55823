#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "distobs/linalg.hpp"
#include "distobs/model.hpp"

namespace distobs {

/// How agent i sees one unstable miniblock through C_i.
enum class MiniblockGroup : std::uint8_t {
  kBlind = 1,    // every column of the C_i block is zero
  kPartial = 2,  // leading unit-column zero, some later unit-column nonzero
  kFull = 3,     // leading unit-column nonzero: the whole miniblock is observable
};

struct MiniblockClass {
  MiniblockGroup group = MiniblockGroup::kBlind;
  // One-based index of the first nonzero unit-column; 0 unless kPartial.
  int first_nonzero_unit = 0;
};

class AgentClassification {
 public:
  AgentClassification(int agent, std::vector<std::vector<MiniblockClass>> per_eig)
      : agent_(agent), per_eig_(std::move(per_eig)) {}

  int agent() const { return agent_; }
  int num_eigs() const { return static_cast<int>(per_eig_.size()); }
  const MiniblockClass& at(ModeId id) const { return per_eig_.at(id.eig).at(id.block); }
  MiniblockGroup group(ModeId id) const { return at(id).group; }
  int t_index(ModeId id) const { return at(id).first_nonzero_unit; }
  /// Block indices of eigenvalue l in the given group, ascending.
  std::vector<int> blocks_in(int l, MiniblockGroup g) const;

 private:
  int agent_;
  std::vector<std::vector<MiniblockClass>> per_eig_;
};

/// Sorts each unstable miniblock of `model` for agent `agent` with output C.
/// A unit-column is zero when every entry is at most ztol in magnitude.
AgentClassification classify_agent(int agent, const Eigen::MatrixXd& C, const PlantModel& model,
                                   double ztol = kZeroTol);

struct AgentSets {
  std::vector<int> blind;    // V1
  std::vector<int> partial;  // V2
  std::vector<int> full;     // V3
};

using ModeAgentSets = std::map<ModeId, AgentSets>;

ModeAgentSets mode_agent_sets(const std::vector<AgentClassification>& classifications);

struct DetectabilityReport {
  bool holds = true;
  // Stored eigenvalue indices where rank [A - λI; C] < n.
  std::vector<int> rank_deficient_eigs;
  // Modes with no fully observing agent (always a failure).
  std::vector<ModeId> unobserved_modes;
  // Modes implicated in a failure: the unobserved ones, or every mode of a
  // rank-deficient eigenvalue when none of its modes is unobserved.
  std::vector<ModeId> failing_modes;
};

/// PBH test on the stacked sensors at every unstable eigenvalue.
DetectabilityReport check_joint_detectability(const PlantModel& model, const SensorSuite& sensors,
                                              double rtol = kRankTol);

struct IndependenceReport {
  int agent = 0;
  int eig = 0;
  bool holds = true;
  int rank = 0;
  int vectors = 0;
};

/// Linear independence of the first-nonzero unit-columns (partial blocks)
/// and the leading unit-columns (full blocks), one report per unstable
/// eigenvalue. A unit-column pair (c1, c2) of a complex-pair block enters as
/// the complex vector c1 + i c2 and rank is taken over C.
std::vector<IndependenceReport> check_independence(const AgentClassification& classification,
                                                   const Eigen::MatrixXd& C,
                                                   const PlantModel& model,
                                                   double rtol = kRankTol);

struct AssumptionReport {
  DetectabilityReport joint;
  std::vector<IndependenceReport> independence;

  bool holds() const;
};

class AssumptionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Local observer model for one agent: z_d = [x_2o; x_3; x_s].
struct DetectableSubsystem {
  int agent = 0;
  Eigen::MatrixXd F;
  Eigen::MatrixXd H;
  Eigen::MatrixXd G;
  // Global state index of every entry of z_d.
  std::vector<int> index_map;
  // Number of leading x_2o entries dropped by the selection.
  int num_tail = 0;
  // Global indices of z_u = [x_1; x_2u], the complement of index_map.
  std::vector<int> undetected_index_map;

  int dim() const { return static_cast<int>(index_map.size()); }
  /// Global indices of the retained part x_d = [x_3; x_s].
  std::vector<int> retained_index_map() const;
  /// The 0/1 matrix [0 I] extracting x_d from z_d.
  Eigen::MatrixXd selection_matrix() const;
  /// Q_i with columns ordered [z_u; z_d].
  Eigen::MatrixXd permutation(int n) const;
};

/// Consensus-estimated part for one agent: whole blind and partial miniblocks.
struct ConsensusPartition {
  int agent = 0;
  Eigen::MatrixXd A_u;
  Eigen::MatrixXd B_u;
  std::vector<ModeId> modes;
  // Offset of each mode inside x_u.
  std::vector<int> mode_offsets;
  std::vector<int> index_map;

  int dim() const { return static_cast<int>(index_map.size()); }
};

DetectableSubsystem build_detectable_subsystem(const PlantModel& model,
                                               const AgentClassification& classification,
                                               const Eigen::MatrixXd& C,
                                               const AssumptionReport& assumptions);

ConsensusPartition build_consensus_partition(const PlantModel& model,
                                             const AgentClassification& classification,
                                             const AssumptionReport& assumptions);

/// Everything the structure stage produces for a problem. Subsystems and
/// partitions are only filled when the assumptions hold.
struct StructureAnalysis {
  std::vector<AgentClassification> classifications;
  ModeAgentSets sets;
  AssumptionReport assumptions;
  std::vector<DetectableSubsystem> subsystems;
  std::vector<ConsensusPartition> partitions;
};

StructureAnalysis analyze_structure(const PlantModel& model, const SensorSuite& sensors);

}  // namespace distobs
