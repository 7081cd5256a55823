#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "distobs/sim.hpp"
#include "distobs/spectral.hpp"
#include "fixtures.hpp"

namespace distobs {
namespace {

struct SimSetup {
  Problem problem;
  StructureAnalysis structure;
  GainPlan plan;
};

SimSetup prepare(Problem problem, const CouplingGains& gains = {}) {
  StructureAnalysis s = analyze_structure(problem.model, problem.sensors);
  GainPlan plan = design_gains(problem.model, problem.graph, s, gains);
  return {std::move(problem), std::move(s), std::move(plan)};
}

SimulationTrace simulate(const SimSetup& s, const SimConfig& cfg, RunOptions opts = {}) {
  return run(s.problem.model, s.problem.sensors, s.problem.graph, s.structure, s.plan, cfg, opts);
}

Problem two_agent_chain() {
  return parse_model(R"({"eigenvalues": [{"re": 2, "im": 0, "miniblock_dims": [1]}],
    "B": [[1]], "sensors": [[[1]], [[0]]], "adjacency": [[0, 0], [1, 0]]})");
}

TEST(Step, LocalObserverArithmetic) {
  DetectableSubsystem sub;
  sub.F = Eigen::MatrixXd::Constant(1, 1, 0.5);
  sub.H = Eigen::MatrixXd::Constant(1, 1, 1.0);
  sub.G = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::VectorXd next = step_local_observer(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1),
                                                   Eigen::VectorXd::Zero(1), sub,
                                                   Eigen::MatrixXd::Constant(1, 1, 0.5));
  EXPECT_DOUBLE_EQ(next(0), 0.5);
}

TEST(Step, ConsensusArithmeticAndFixedPoint) {
  const Problem p = two_agent_chain();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  const ConsensusPartition& part = s.partitions[1];
  ASSERT_EQ(part.modes.size(), 1u);
  const CouplingGains gains{{{0, 0}, 1.0}};
  const std::vector<Eigen::VectorXd> est{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)};
  const Eigen::VectorXd next =
      step_consensus_layer(1, Eigen::VectorXd::Zero(1), est, Eigen::VectorXd::Zero(1), part, gains, p.graph);
  EXPECT_DOUBLE_EQ(next(0), 2.0);

  const std::vector<Eigen::VectorXd> same{Eigen::VectorXd::Constant(1, 3.0), Eigen::VectorXd::Constant(1, 3.0)};
  const Eigen::VectorXd plant =
      step_consensus_layer(1, same[1], same, Eigen::VectorXd::Ones(1), part, gains, p.graph);
  EXPECT_DOUBLE_EQ(plant(0), 2.0 * 3.0 + 1.0);

  const std::vector<Eigen::VectorXd> missing{Eigen::VectorXd(), Eigen::VectorXd::Zero(1)};
  EXPECT_THROW(step_consensus_layer(1, Eigen::VectorXd::Zero(1), missing, Eigen::VectorXd::Zero(1), part,
                                    gains, p.graph),
               std::invalid_argument);
}

TEST(Step, AssembleEstimate) {
  const SimSetup s = prepare(fixtures::pendubot());
  const int n = s.problem.model.n();
  const DetectableSubsystem& sub = s.structure.subsystems[2];
  const ConsensusPartition& part = s.structure.partitions[2];
  EXPECT_TRUE(assemble_estimate(Eigen::VectorXd::Zero(sub.dim()), Eigen::VectorXd::Zero(part.dim()), sub,
                                part, n)
                  .isZero(0.0));
  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x(k) = k + 1;
  EXPECT_EQ(assemble_estimate(gather(x, sub.index_map), gather(x, part.index_map), sub, part, n), x);
}

TEST(Run, ZeroInitialErrorStaysZero) {
  const SimSetup s = prepare(fixtures::pendubot());
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 200;
  cfg.x0 = Eigen::VectorXd::LinSpaced(24, -1.0, 1.0);
  cfg.observer_init = ObserverInit::kExplicit;
  cfg.explicit_init.assign(6, cfg.x0);
  const SimulationTrace trace = simulate(s, cfg);
  EXPECT_EQ(trace.err_norm.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Run, SerialAndParallelAreBitIdentical) {
  const SimSetup s = prepare(fixtures::pendubot(), fixtures::paper_gains());
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 400;
  const SimulationTrace a = simulate(s, cfg, {Execution::kSerial, true});
  const SimulationTrace b = simulate(s, cfg, {Execution::kParallel, true});
  const SimulationTrace c = simulate(s, cfg, {Execution::kParallel, true});
  EXPECT_EQ(a.err_norm, b.err_norm);
  EXPECT_EQ(b.err_norm, c.err_norm);
  for (int t = 0; t <= cfg.horizon; ++t) {
    for (int i = 0; i < 6; ++i) ASSERT_EQ(a.estimates[t][i], b.estimates[t][i]);
  }
}

TEST(Run, ErrorsAreInputInvariant) {
  const SimSetup s = prepare(fixtures::pendubot(), fixtures::paper_gains());
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 300;
  const SimulationTrace free = simulate(s, cfg);
  for (std::size_t c = 0; c < cfg.input.size(); ++c) {
    cfg.input[c].kind = InputChannel::Kind::kSinusoid;
    cfg.input[c].value = 0.5 + 0.1 * static_cast<double>(c);
    cfg.input[c].period = 37.0 + static_cast<double>(c);
  }
  const SimulationTrace driven = simulate(s, cfg);
  for (int t = 0; t <= cfg.horizon; ++t) {
    const double scale = 1.0 + driven.x[t].norm();
    for (int i = 0; i < 6; ++i) {
      EXPECT_LT((free.error(t, i) - driven.error(t, i)).norm(), 1e-10 * scale) << t << " " << i;
    }
  }
}

TEST(Run, BlindAgentContractsAtClosedFormRate) {
  const SimSetup s = prepare(two_agent_chain(), {{{0, 0}, 0.7}});
  SimConfig cfg;
  cfg.horizon = 30;
  cfg.x0 = Eigen::VectorXd::Zero(1);
  cfg.observer_init = ObserverInit::kExplicit;
  cfg.explicit_init = {cfg.x0, Eigen::VectorXd::Constant(1, 5.0)};
  const SimulationTrace trace = simulate(s, cfg);
  const double rate = std::abs((1.0 - 0.7 * 1.0) * 2.0);
  for (int t = 0; t < cfg.horizon; ++t) {
    EXPECT_EQ(trace.err_norm(t, 0), 0.0);
    EXPECT_NEAR(trace.mode_err[t + 1](1, 0) / trace.mode_err[t](1, 0), rate, 1e-9);
  }
}

TEST(Run, ConsensusErrorFollowsKroneckerRecursion) {
  const SimSetup s = prepare(fixtures::pendubot(), fixtures::paper_gains());
  const PlantModel& model = s.problem.model;
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 60;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  cfg.x0 = Eigen::VectorXd::Zero(model.n());
  for (int k = 0; k < model.n(); ++k) cfg.x0(k) = unit(rng);
  cfg.observer_init = ObserverInit::kExplicit;
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd init = cfg.x0;  // detectable part exact
    for (int k : s.structure.partitions[i].index_map) init(k) += unit(rng);
    cfg.explicit_init.push_back(init);
  }
  const SimulationTrace trace = simulate(s, cfg);

  for (const auto& [id, d] : s.plan.modes) {
    const MiniblockSpec& b = model.block(id);
    const Eigen::MatrixXd M = mode_error_matrix(d.gain, d.reduced, model.block_matrix(id));
    const auto stacked = [&](int t) {
      Eigen::VectorXd e(b.size() * static_cast<int>(d.consensus_agents.size()));
      for (std::size_t a = 0; a < d.consensus_agents.size(); ++a) {
        e.segment(a * b.size(), b.size()) = trace.error(t, d.consensus_agents[a]).segment(b.state_offset, b.size());
      }
      return e;
    };
    Eigen::VectorXd e = stacked(0);
    for (int t = 1; t <= cfg.horizon; ++t) {
      e = M * e;
      const Eigen::VectorXd actual = stacked(t);
      EXPECT_LE((actual - e).norm(), 1e-9 * std::max(1.0, e.norm())) << id.label() << " t=" << t;
    }
  }
}

TEST(Run, FullObserversSkipConsensusForTheirModes) {
  const SimSetup s = prepare(fixtures::pendubot());
  for (const auto& [id, sets] : s.structure.sets) {
    for (int i : sets.full) {
      const auto& modes = s.structure.partitions[i].modes;
      EXPECT_EQ(std::find(modes.begin(), modes.end(), id), modes.end());
    }
    for (int i : sets.blind) {
      const auto& modes = s.structure.partitions[i].modes;
      EXPECT_NE(std::find(modes.begin(), modes.end(), id), modes.end());
    }
  }
}

TEST(Run, PendubotPaperGainsConverge) {
  const SimSetup s = prepare(fixtures::pendubot(), fixtures::paper_gains());
  const SimulationTrace trace = simulate(s, s.problem.sim);
  const ErrorMetrics m = error_metrics(trace);
  for (int i = 0; i < 6; ++i) {
    EXPECT_LT(m.final_norm[i], m.initial_norm[i]);
    EXPECT_LT(m.decay_rate[i], 1.0);
    EXPECT_GT(m.initial_norm[i], 0.0);
  }
}

TEST(Run, LocalObserverErrorDecaysAtDesignedRate) {
  const SimSetup s = prepare(fixtures::pendubot(), fixtures::paper_gains());
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 400;
  const SimulationTrace trace = simulate(s, cfg);
  const DetectableSubsystem& sub = s.structure.subsystems[1];
  const std::vector<int> retained = sub.retained_index_map();
  std::vector<double> norms;
  for (int t = 0; t <= cfg.horizon; ++t) norms.push_back(gather(trace.error(t, 1), retained).norm());
  EXPECT_LE(decay_rate(norms), s.plan.luenberger_radius[1] + 0.05);
}

TEST(Run, OriginalCoordinatesUseTransform) {
  const SimSetup s = prepare(fixtures::pendubot());
  SimConfig cfg = s.problem.sim;
  cfg.horizon = 3;
  const SimulationTrace trace = simulate(s, cfg);
  const Eigen::MatrixXd& T = *s.problem.model.transform();
  EXPECT_EQ(trace.original_estimate(2, 3), Eigen::VectorXd(T * trace.estimates[2][3]));
  EXPECT_EQ(trace.original_state(2), Eigen::VectorXd(T * trace.x[2]));
}

TEST(Run, BadGainsDivergeWithStepIndex) {
  SimSetup s = prepare(fixtures::pendubot());
  s.plan.coupling[{1, 0}] = 3.0;
  verify_plan(s.plan, s.problem.model, s.problem.graph, s.structure);
  ASSERT_FALSE(s.plan.verified);
  EXPECT_THROW(simulate(s, s.problem.sim), std::invalid_argument);
  try {
    simulate(s, s.problem.sim, {Execution::kParallel, false});
    FAIL() << "expected divergence";
  } catch (const SimulationDiverged& e) {
    EXPECT_GT(e.step(), 0);
    EXPECT_GE(e.agent(), 0);
  }
}

TEST(Metrics, ZeroTraceAndGeometricDecay) {
  const std::vector<double> zeros(50, 0.0);
  EXPECT_EQ(decay_rate(zeros), 0.0);
  std::vector<double> geometric;
  for (int t = 0; t <= 200; ++t) geometric.push_back(std::pow(0.9, t));
  EXPECT_NEAR(decay_rate(geometric), 0.9, 1e-9);

  Eigen::MatrixXd norms = Eigen::MatrixXd::Zero(10, 2);
  const ErrorMetrics m = error_metrics(norms);
  EXPECT_EQ(m.final_norm[0], 0.0);
  EXPECT_EQ(m.total_decay_rate, 0.0);
  EXPECT_THROW(error_metrics(Eigen::MatrixXd(0, 2)), std::invalid_argument);
}

}  // namespace
}  // namespace distobs
