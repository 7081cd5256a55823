#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "distobs/gains.hpp"
#include "distobs/spectral.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace distobs {
namespace {

using cd = std::complex<double>;

TEST(FeasibleInterval, ScalarClosedForm) {
  const std::vector<cd> mus{{1.0, 0.0}};
  const FeasibleInterval f = feasible_interval(2.0, mus);
  EXPECT_FALSE(f.empty);
  EXPECT_DOUBLE_EQ(f.lower, 0.5);
  EXPECT_DOUBLE_EQ(f.upper, 1.5);
  EXPECT_TRUE(f.contains(1.0));
  EXPECT_FALSE(f.contains(0.5));
}

TEST(FeasibleInterval, EmptyCases) {
  const std::vector<cd> zero{{0.0, 0.0}, {1.0, 0.0}};
  EXPECT_TRUE(feasible_interval(1.5, zero).empty);
  EXPECT_EQ(feasible_interval(1.5, zero).per_eigen[0].reason, "mu = 0");
  // Re(μ) small against |μ|: the discriminant goes negative.
  const std::vector<cd> skew{{0.1, 1.0}};
  EXPECT_TRUE(feasible_interval(2.0, skew).empty);
  // Disjoint per-μ intervals: (0.5, 1.5) and (0.05, 0.15).
  const std::vector<cd> spread{{1.0, 0.0}, {10.0, 0.0}};
  EXPECT_TRUE(feasible_interval(2.0, spread).empty);
  EXPECT_THROW(feasible_interval(0.5, spread), std::invalid_argument);
}

TEST(FeasibleInterval, EmptySpectrumIsUnconstrained) {
  const FeasibleInterval f = feasible_interval(1.3, std::vector<cd>{});
  EXPECT_TRUE(f.unconstrained);
  EXPECT_FALSE(f.empty);
  EXPECT_TRUE(f.contains(123.0));
}

TEST(FeasibleInterval, MatchesPointwiseConstraint) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double rho = 1.0 + 1.5 * unit(rng);
    std::vector<cd> mus;
    const int count = 1 + trial % 4;
    for (int k = 0; k < count; ++k) mus.emplace_back(0.05 + 3 * unit(rng), 2 * unit(rng) - 1);
    const FeasibleInterval f = feasible_interval(rho, mus);
    for (int s = 0; s < 40; ++s) {
      const double k = -0.5 + 3.0 * unit(rng);
      if (!f.empty && (std::abs(k - f.lower) < 1e-9 || std::abs(k - f.upper) < 1e-9)) continue;
      EXPECT_EQ(f.contains(k), oracle::product_radius(k, mus, rho) < 1.0) << "trial " << trial;
    }
  }
}

TEST(Pendubot, IntervalsMatchPublishedBounds) {
  const Problem p = fixtures::pendubot();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  const auto modes = analyze_modes(p.model, p.graph, s.sets);
  for (int h = 0; h < 6; ++h) {
    const FeasibleInterval& a = modes.at({0, h}).interval;
    EXPECT_NEAR(a.lower, 0.0, 1e-3);
    EXPECT_NEAR(a.upper, 1.0, 1e-3);
    const FeasibleInterval& b = modes.at({1, h}).interval;
    EXPECT_NEAR(b.lower, 0.0403, 1e-3);
    EXPECT_NEAR(b.upper, 0.9798, 1e-3);
  }
}

TEST(Pendubot, ReducedLaplacianSpectrumMatchesCharacteristicPolynomial) {
  const Problem p = fixtures::pendubot();
  const std::vector<int> full{1, 3, 4};  // V3 of (ℓ, 5)
  const Eigen::MatrixXd red = reduced_laplacian(p.graph.laplacian(), full);
  Eigen::Matrix3d expected;
  expected << 1, 0, 0, -1, 1, 0, 0, -1, 2;
  EXPECT_EQ(red, Eigen::MatrixXd(expected));
  const auto roots = oracle::polynomial_roots(oracle::characteristic_polynomial(red));
  EXPECT_LT(hausdorff_distance(eigenvalues(red), roots), 1e-6);
  const std::vector<cd> mus{{2, 0}, {1, 0}, {1, 0}};
  EXPECT_LT(hausdorff_distance(eigenvalues(red), mus), 1e-12);
  const FeasibleInterval f = feasible_interval(1.042, eigenvalues(red));
  EXPECT_NEAR(f.midpoint(), 0.5101, 1e-4);
}

TEST(Forest, PendubotIsReachableAndBrokenGraphIsNot) {
  const Problem p = fixtures::pendubot();
  const std::vector<int> roots{1, 3, 4};
  EXPECT_TRUE(spanning_forest_diagnostic(p.graph, roots).reachable);
  const Problem q = fixtures::pendubot_without_edge_4_to_1();
  const ForestReport r = spanning_forest_diagnostic(q.graph, roots);
  EXPECT_FALSE(r.reachable);
  EXPECT_EQ(r.orphaned.front(), 0);
  EXPECT_EQ(spanning_forest_diagnostic(q.graph, std::vector<int>{}).orphaned.size(), 6u);
}

TEST(Forest, ZeroEigenvalueImpliesOrphanedAgent) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int singular = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int N = 2 + trial % 5;
    const CommGraph g(oracle::random_adjacency(rng, N, 0.3));
    std::vector<int> roots;
    for (int i = 0; i < N; ++i) {
      if (unit(rng) < 0.3) roots.push_back(i);
    }
    const auto mus = eigenvalues(reduced_laplacian(g.laplacian(), roots));
    const ForestReport r = spanning_forest_diagnostic(g, roots);
    const bool has_zero = std::any_of(mus.begin(), mus.end(), [](cd m) { return std::abs(m) <= 1e-12; });
    if (has_zero) ++singular;
    EXPECT_EQ(has_zero, !r.reachable) << "trial " << trial;
  }
  EXPECT_GT(singular, 20);
}

TEST(PickGains, MidpointOverrideAndRange) {
  std::map<ModeId, FeasibleInterval> intervals;
  intervals[{0, 0}] = feasible_interval(2.0, std::vector<cd>{{1, 0}});
  intervals[{0, 1}] = feasible_interval(2.0, std::vector<cd>{});
  const CouplingGains mid = pick_coupling_gains(intervals);
  EXPECT_DOUBLE_EQ(mid.at({0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(mid.at({0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(pick_coupling_gains(intervals, {{{0, 0}, 0.7}}).at({0, 0}), 0.7);
  EXPECT_THROW(pick_coupling_gains(intervals, {{{0, 0}, 1.5}}), GainRangeError);
  EXPECT_THROW(pick_coupling_gains(intervals, {{{3, 0}, 1.0}}), GainRangeError);
  intervals[{1, 0}] = feasible_interval(2.0, std::vector<cd>{{0, 0}});
  EXPECT_THROW(pick_coupling_gains(intervals), InfeasibleError);
}

TEST(Riccati, ScalarFixedPoint) {
  const Eigen::MatrixXd F = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const oracle::ScalarFilter ref = oracle::scalar_riccati(2.0, 1.0);
  EXPECT_NEAR(ref.p, 2.0 + std::sqrt(5.0), 1e-12);
  const Eigen::MatrixXd L = design_output_injection(F, H);
  EXPECT_NEAR(L(0, 0), ref.l, 1e-9);
  EXPECT_NEAR(L(0, 0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
}

TEST(Riccati, UndetectablePairThrows) {
  const Eigen::MatrixXd F = Eigen::MatrixXd::Constant(1, 1, 2.0);
  const Eigen::MatrixXd H = Eigen::MatrixXd::Zero(1, 1);
  EXPECT_THROW(design_output_injection(F, H), DesignError);
  EXPECT_EQ(design_output_injection(Eigen::MatrixXd(0, 0), Eigen::MatrixXd(1, 0)).rows(), 0);
}

TEST(Riccati, RandomDetectablePairsBecomeSchur) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int tested = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    const int p = 1 + trial % 2;
    Eigen::MatrixXd F(n, n);
    Eigen::MatrixXd H(p, n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) F(r, c) = 0.8 * gauss(rng);
    }
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < n; ++c) H(r, c) = gauss(rng);
    }
    if (!oracle::detectable_by_observability(F, H)) continue;
    ++tested;
    const Eigen::MatrixXd L = design_output_injection(F, H);
    EXPECT_LT(spectral_radius(F - L * H), 1.0 - kSchurMargin);
  }
  EXPECT_GT(tested, 100);
}

TEST(Kron, SpectrumProductsMatchDirectSpectrum) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int N = 1 + trial % 5;
    const Eigen::MatrixXd red =
        reduced_laplacian(laplacian_of(oracle::random_adjacency(rng, N + 1, 0.5)), std::vector<int>{0});
    const double r = 1.0 + 1.5 * unit(rng);
    const EigenvalueSpec eig =
        unit(rng) < 0.5 ? EigenvalueSpec::Real(r) : EigenvalueSpec::ComplexPair(r * 0.6, r * 0.8);
    const Eigen::MatrixXd block = oracle::jordan_block(eig, 1 + trial % 3);
    const KronSpectrumReport rep = kron_spectrum_check(2.0 * unit(rng), red, block);
    EXPECT_LT(rep.max_mismatch, 1e-8) << "trial " << trial;
  }
}

TEST(Theorem, IntervalMembershipEquivalentToSchur) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 150; ++trial) {
    const int N = 2 + trial % 5;
    const Eigen::MatrixXd L = laplacian_of(oracle::random_adjacency(rng, N, 0.5));
    const Eigen::MatrixXd red = reduced_laplacian(L, std::vector<int>{0});
    const double r = 1.0 + 1.5 * unit(rng);
    const EigenvalueSpec eig =
        unit(rng) < 0.5 ? EigenvalueSpec::Real(r) : EigenvalueSpec::ComplexPair(0.6 * r, 0.8 * r);
    const Eigen::MatrixXd block = oracle::jordan_block(eig, 1 + trial % 3);
    const FeasibleInterval f = feasible_interval(eig.modulus(), eigenvalues(red));
    for (int s = 0; s < 20; ++s) {
      const double k = 2.5 * unit(rng) - 0.25;
      if (!f.empty && (std::abs(k - f.lower) < 1e-6 || std::abs(k - f.upper) < 1e-6)) continue;
      EXPECT_EQ(f.contains(k), spectral_radius(mode_error_matrix(k, red, block)) < 1.0)
          << "trial " << trial << " k " << k;
    }
  }
}

TEST(Design, PendubotPlanIsVerified) {
  const Problem p = fixtures::pendubot();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  const GainPlan plan = design_gains(p.model, p.graph, s);
  EXPECT_TRUE(plan.verified);
  ASSERT_EQ(plan.luenberger_radius.size(), 6u);
  for (double rho : plan.luenberger_radius) EXPECT_LT(rho, 1.0 - kSchurMargin);
  for (const auto& [id, d] : plan.modes) {
    EXPECT_TRUE(d.interval.contains(d.gain));
    EXPECT_NEAR(d.radius, oracle::product_radius(d.gain, d.spectrum, p.model.eig(id.eig).modulus()),
                1e-9);
  }
}

TEST(Design, PaperGainsVerify) {
  const Problem p = fixtures::pendubot();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  const GainPlan plan = design_gains(p.model, p.graph, s, fixtures::paper_gains());
  EXPECT_TRUE(plan.verified);
  EXPECT_DOUBLE_EQ(plan.gain({1, 5}), 0.7);
}

TEST(Design, BrokenGraphIsInfeasibleWithOrphans) {
  const Problem p = fixtures::pendubot_without_edge_4_to_1();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  try {
    design_gains(p.model, p.graph, s);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    ASSERT_FALSE(e.modes().empty());
    for (const InfeasibleMode& m : e.modes()) {
      EXPECT_TRUE(m.interval.empty);
      EXPECT_FALSE(m.forest.orphaned.empty());
    }
    EXPECT_NE(std::string(e.what()).find("orphaned agents {1"), std::string::npos) << e.what();
  }
}

TEST(Design, VerifyPlanFlagsBadGain) {
  const Problem p = fixtures::pendubot();
  const StructureAnalysis s = analyze_structure(p.model, p.sensors);
  GainPlan plan = design_gains(p.model, p.graph, s);
  plan.coupling[{1, 0}] = 1.5;
  verify_plan(plan, p.model, p.graph, s);
  EXPECT_FALSE(plan.verified);
  EXPECT_GT(plan.modes.at({1, 0}).radius, 1.0);
}

}  // namespace
}  // namespace distobs
