#include "distobs/structure.hpp"

#include <algorithm>
#include <string>

#include "distobs/linalg.hpp"

namespace distobs {

namespace {

// Columns of C belonging to unit k (zero-based) of miniblock b.
Eigen::MatrixXd unit_columns(const Eigen::MatrixXd& C, const MiniblockSpec& b, int k) {
  return C.middleCols(b.state_offset + k * b.unit_size, b.unit_size);
}

void append_range(std::vector<int>& out, int first, int count) {
  for (int k = 0; k < count; ++k) out.push_back(first + k);
}

void require(const AssumptionReport& assumptions, int agent) {
  if (!assumptions.joint.holds) {
    throw AssumptionError("joint detectability fails; agent " + std::to_string(agent + 1) +
                          " has no provably detectable subsystem");
  }
  for (const auto& r : assumptions.independence) {
    if (r.agent == agent && !r.holds) {
      throw AssumptionError("independence fails for agent " + std::to_string(agent + 1) +
                            ", eigenvalue " + std::to_string(r.eig + 1));
    }
  }
}

}  // namespace

std::vector<int> AgentClassification::blocks_in(int l, MiniblockGroup g) const {
  std::vector<int> out;
  const auto& row = per_eig_.at(l);
  for (int h = 0; h < static_cast<int>(row.size()); ++h) {
    if (row[h].group == g) out.push_back(h);
  }
  return out;
}

AgentClassification classify_agent(int agent, const Eigen::MatrixXd& C, const PlantModel& model,
                                   double ztol) {
  if (C.cols() != model.n()) {
    throw ModelError(ModelError::Kind::kDimension,
                     "C_" + std::to_string(agent + 1) + " has " + std::to_string(C.cols()) +
                         " columns, expected " + std::to_string(model.n()));
  }
  std::vector<std::vector<MiniblockClass>> per_eig;
  for (int l = 0; l < model.num_unstable(); ++l) {
    std::vector<MiniblockClass> row;
    for (const MiniblockSpec& b : model.blocks_of(l)) {
      MiniblockClass cls;
      for (int k = 0; k < b.dim_units; ++k) {
        if (is_zero(unit_columns(C, b, k), ztol)) continue;
        cls.group = k == 0 ? MiniblockGroup::kFull : MiniblockGroup::kPartial;
        cls.first_nonzero_unit = k == 0 ? 0 : k + 1;
        break;
      }
      row.push_back(cls);
    }
    per_eig.push_back(std::move(row));
  }
  return AgentClassification(agent, std::move(per_eig));
}

ModeAgentSets mode_agent_sets(const std::vector<AgentClassification>& classifications) {
  ModeAgentSets sets;
  for (const AgentClassification& c : classifications) {
    for (int l = 0; l < c.num_eigs(); ++l) {
      for (auto g : {MiniblockGroup::kBlind, MiniblockGroup::kPartial, MiniblockGroup::kFull}) {
        for (int h : c.blocks_in(l, g)) {
          AgentSets& s = sets[ModeId{l, h}];
          auto& bucket = g == MiniblockGroup::kBlind     ? s.blind
                         : g == MiniblockGroup::kPartial ? s.partial
                                                         : s.full;
          bucket.push_back(c.agent());
        }
      }
    }
  }
  for (auto& [id, s] : sets) {
    std::sort(s.blind.begin(), s.blind.end());
    std::sort(s.partial.begin(), s.partial.end());
    std::sort(s.full.begin(), s.full.end());
  }
  return sets;
}

DetectabilityReport check_joint_detectability(const PlantModel& model, const SensorSuite& sensors,
                                              double rtol) {
  DetectabilityReport report;
  const int n = model.n();
  const Eigen::MatrixXd C = sensors.stacked();

  std::vector<AgentClassification> classes;
  for (int i = 0; i < sensors.N(); ++i) classes.push_back(classify_agent(i, sensors.C[i], model));
  const ModeAgentSets sets = mode_agent_sets(classes);

  for (int l = 0; l < model.num_unstable(); ++l) {
    const std::complex<double> lambda = model.eig(l).value();
    Eigen::MatrixXcd pbh(n + C.rows(), n);
    pbh.topRows(n) = model.A().cast<std::complex<double>>();
    pbh.topRows(n).diagonal().array() -= lambda;
    pbh.bottomRows(C.rows()) = C.cast<std::complex<double>>();
    const bool full_rank = numerical_rank(pbh, rtol) == n;

    std::vector<ModeId> unobserved;
    for (int h = 0; h < model.num_blocks(l); ++h) {
      const auto it = sets.find(ModeId{l, h});
      if (it == sets.end() || it->second.full.empty()) unobserved.push_back({l, h});
    }
    report.unobserved_modes.insert(report.unobserved_modes.end(), unobserved.begin(),
                                   unobserved.end());
    if (full_rank && unobserved.empty()) continue;

    report.holds = false;
    if (!full_rank) report.rank_deficient_eigs.push_back(l);
    if (!unobserved.empty()) {
      report.failing_modes.insert(report.failing_modes.end(), unobserved.begin(), unobserved.end());
    } else {
      for (int h = 0; h < model.num_blocks(l); ++h) report.failing_modes.push_back({l, h});
    }
  }
  return report;
}

std::vector<IndependenceReport> check_independence(const AgentClassification& classification,
                                                   const Eigen::MatrixXd& C,
                                                   const PlantModel& model, double rtol) {
  std::vector<IndependenceReport> out;
  for (int l = 0; l < model.num_unstable(); ++l) {
    std::vector<Eigen::MatrixXd> groups;
    for (int h = 0; h < model.num_blocks(l); ++h) {
      const ModeId id{l, h};
      const MiniblockSpec& b = model.block(id);
      switch (classification.group(id)) {
        case MiniblockGroup::kBlind:
          break;
        case MiniblockGroup::kPartial:
          groups.push_back(unit_columns(C, b, classification.t_index(id) - 1));
          break;
        case MiniblockGroup::kFull:
          groups.push_back(unit_columns(C, b, 0));
          break;
      }
    }
    IndependenceReport r;
    r.agent = classification.agent();
    r.eig = l;
    r.vectors = static_cast<int>(groups.size());
    if (!groups.empty()) {
      const auto rows = C.rows();
      const auto k = static_cast<Eigen::Index>(groups.size());
      if (model.eig(l).unit_size() == 1) {
        Eigen::MatrixXd V(rows, k);
        for (Eigen::Index c = 0; c < k; ++c) V.col(c) = groups[c].col(0);
        r.rank = numerical_rank(V, rtol);
      } else {
        Eigen::MatrixXd re(rows, k);
        Eigen::MatrixXd im(rows, k);
        for (Eigen::Index c = 0; c < k; ++c) {
          re.col(c) = groups[c].col(0);
          im.col(c) = groups[c].col(1);
        }
        r.rank = complex_rank(re, im, rtol);
      }
    }
    r.holds = r.rank == r.vectors;
    out.push_back(r);
  }
  return out;
}

bool AssumptionReport::holds() const {
  return joint.holds &&
         std::all_of(independence.begin(), independence.end(), [](const auto& r) { return r.holds; });
}

std::vector<int> DetectableSubsystem::retained_index_map() const {
  return {index_map.begin() + num_tail, index_map.end()};
}

Eigen::MatrixXd DetectableSubsystem::selection_matrix() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim() - num_tail, dim());
  S.rightCols(dim() - num_tail).setIdentity();
  return S;
}

Eigen::MatrixXd DetectableSubsystem::permutation(int n) const {
  std::vector<int> order = undetected_index_map;
  order.insert(order.end(), index_map.begin(), index_map.end());
  if (static_cast<int>(order.size()) != n) {
    throw std::logic_error("detectable subsystem index maps do not tile the state");
  }
  return permutation_matrix(order);
}

DetectableSubsystem build_detectable_subsystem(const PlantModel& model,
                                               const AgentClassification& classification,
                                               const Eigen::MatrixXd& C,
                                               const AssumptionReport& assumptions) {
  const int agent = classification.agent();
  require(assumptions, agent);

  DetectableSubsystem sub;
  sub.agent = agent;
  std::vector<int> blind;
  std::vector<int> heads;
  std::vector<int> tails;
  std::vector<int> full;
  for (const ModeId id : model.unstable_modes()) {
    const MiniblockSpec& b = model.block(id);
    switch (classification.group(id)) {
      case MiniblockGroup::kBlind:
        append_range(blind, b.state_offset, b.size());
        break;
      case MiniblockGroup::kPartial: {
        const int head = (classification.t_index(id) - 1) * b.unit_size;
        append_range(heads, b.state_offset, head);
        append_range(tails, b.state_offset + head, b.size() - head);
        break;
      }
      case MiniblockGroup::kFull:
        append_range(full, b.state_offset, b.size());
        break;
    }
  }
  sub.index_map = tails;
  sub.index_map.insert(sub.index_map.end(), full.begin(), full.end());
  for (int l = model.num_unstable(); l < model.num_eigs(); ++l) {
    for (const MiniblockSpec& b : model.blocks_of(l)) append_range(sub.index_map, b.state_offset, b.size());
  }
  sub.num_tail = static_cast<int>(tails.size());
  sub.undetected_index_map = blind;
  sub.undetected_index_map.insert(sub.undetected_index_map.end(), heads.begin(), heads.end());

  sub.F = principal(model.A(), sub.index_map);
  sub.H = select_cols(C, sub.index_map);
  sub.G = select_rows(model.B(), sub.index_map);
  return sub;
}

ConsensusPartition build_consensus_partition(const PlantModel& model,
                                             const AgentClassification& classification,
                                             const AssumptionReport& assumptions) {
  require(assumptions, classification.agent());
  ConsensusPartition part;
  part.agent = classification.agent();
  for (const ModeId id : model.unstable_modes()) {
    if (classification.group(id) == MiniblockGroup::kFull) continue;
    const MiniblockSpec& b = model.block(id);
    part.modes.push_back(id);
    part.mode_offsets.push_back(part.dim());
    append_range(part.index_map, b.state_offset, b.size());
  }
  part.A_u = principal(model.A(), part.index_map);
  part.B_u = select_rows(model.B(), part.index_map);
  return part;
}

StructureAnalysis analyze_structure(const PlantModel& model, const SensorSuite& sensors) {
  StructureAnalysis out;
  for (int i = 0; i < sensors.N(); ++i) {
    out.classifications.push_back(classify_agent(i, sensors.C[i], model));
  }
  out.sets = mode_agent_sets(out.classifications);
  out.assumptions.joint = check_joint_detectability(model, sensors);
  for (int i = 0; i < sensors.N(); ++i) {
    auto reports = check_independence(out.classifications[i], sensors.C[i], model);
    out.assumptions.independence.insert(out.assumptions.independence.end(), reports.begin(),
                                        reports.end());
  }
  if (!out.assumptions.holds()) return out;
  for (int i = 0; i < sensors.N(); ++i) {
    out.subsystems.push_back(
        build_detectable_subsystem(model, out.classifications[i], sensors.C[i], out.assumptions));
    out.partitions.push_back(
        build_consensus_partition(model, out.classifications[i], out.assumptions));
  }
  return out;
}

}  // namespace distobs
