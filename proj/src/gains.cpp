#include "distobs/gains.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "distobs/spectral.hpp"

namespace distobs {

namespace {

constexpr double kRiccatiTol = 1e-10;
constexpr int kRiccatiMaxIter = 100000;

std::string agents_label(const std::vector<int>& agents) {
  std::string out;
  for (int a : agents) out += (out.empty() ? "" : ",") + std::to_string(a + 1);
  return "{" + out + "}";
}

double mode_radius(double k, const Eigen::MatrixXd& reduced, const Eigen::MatrixXd& block) {
  if (reduced.size() == 0) return 0.0;
  return spectral_radius(mode_error_matrix(k, reduced, block));
}

}  // namespace

FeasibleInterval feasible_interval(double rho, std::span<const std::complex<double>> spectrum) {
  if (!(rho >= 1.0)) throw std::invalid_argument("feasible_interval: rho < 1 (stable mode)");
  FeasibleInterval out;
  out.rho = rho;
  if (spectrum.empty()) {
    out.unconstrained = true;
    out.lower = -std::numeric_limits<double>::infinity();
    out.upper = std::numeric_limits<double>::infinity();
    return out;
  }

  const double slack = 1.0 - 1.0 / (rho * rho);
  out.lower = -std::numeric_limits<double>::infinity();
  out.upper = std::numeric_limits<double>::infinity();
  for (const std::complex<double>& mu : spectrum) {
    MuConstraint c;
    c.mu = mu;
    const double a = mu.real();
    const double mod2 = std::norm(mu);
    const double disc = a * a - mod2 * slack;
    if (std::abs(mu) <= kZeroTol) {
      c.reason = "mu = 0";
    } else if (a <= 0.0) {
      c.reason = "Re(mu) <= 0";
    } else if (disc <= 0.0) {
      c.reason = "discriminant <= 0";
    } else {
      const double root = std::sqrt(disc);
      c.feasible = true;
      c.lower = (a - root) / mod2;
      c.upper = (a + root) / mod2;
      out.lower = std::max(out.lower, c.lower);
      out.upper = std::min(out.upper, c.upper);
    }
    if (!c.feasible) out.empty = true;
    out.per_eigen.push_back(c);
  }
  if (!(out.lower < out.upper)) out.empty = true;
  return out;
}

std::vector<int> complement(int N, std::span<const int> full) {
  std::vector<int> out;
  for (int i = 0; i < N; ++i) {
    if (std::find(full.begin(), full.end(), i) == full.end()) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd reduced_laplacian(const Eigen::MatrixXd& L, std::span<const int> full) {
  const std::vector<int> keep = complement(static_cast<int>(L.rows()), full);
  return principal(L, keep);
}

ForestReport spanning_forest_diagnostic(const CommGraph& graph, std::span<const int> roots) {
  const int N = graph.N();
  std::vector<bool> seen(N, false);
  std::deque<int> queue;
  for (int r : roots) {
    if (!seen[r]) {
      seen[r] = true;
      queue.push_back(r);
    }
  }
  while (!queue.empty()) {
    const int j = queue.front();
    queue.pop_front();
    for (int i = 0; i < N; ++i) {
      if (!seen[i] && graph.weight(i, j) > 0.0) {
        seen[i] = true;
        queue.push_back(i);
      }
    }
  }
  ForestReport report;
  for (int i = 0; i < N; ++i) {
    if (!seen[i]) report.orphaned.push_back(i);
  }
  report.reachable = report.orphaned.empty();
  return report;
}

CouplingGains pick_coupling_gains(const std::map<ModeId, FeasibleInterval>& intervals,
                                  const CouplingGains& user) {
  std::vector<InfeasibleMode> bad;
  for (const auto& [id, interval] : intervals) {
    if (interval.empty) bad.push_back({id, interval, {}});
  }
  if (!bad.empty()) {
    std::string what = "no feasible coupling gain for mode";
    for (const auto& b : bad) what += " (" + b.mode.label() + ")";
    throw InfeasibleError(what, std::move(bad));
  }
  for (const auto& [id, k] : user) {
    if (!intervals.contains(id)) {
      throw GainRangeError("gain given for unknown unstable mode (" + id.label() + ")", id);
    }
  }

  CouplingGains out;
  for (const auto& [id, interval] : intervals) {
    if (interval.unconstrained) {
      out[id] = 0.0;
      continue;
    }
    const auto it = user.find(id);
    if (it == user.end()) {
      out[id] = interval.midpoint();
      continue;
    }
    if (!interval.contains(it->second)) {
      throw GainRangeError("gain " + std::to_string(it->second) + " for mode (" + id.label() +
                               ") lies outside (" + std::to_string(interval.lower) + ", " +
                               std::to_string(interval.upper) + ")",
                           id);
    }
    out[id] = it->second;
  }
  return out;
}

Eigen::MatrixXd design_output_injection(const Eigen::MatrixXd& F, const Eigen::MatrixXd& H) {
  const Eigen::Index n = F.rows();
  const Eigen::Index p = H.rows();
  if (F.cols() != n || H.cols() != n) throw DesignError("design_output_injection: size mismatch");
  if (n == 0) return Eigen::MatrixXd::Zero(0, p);

  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  bool converged = false;
  for (int iter = 0; iter < kRiccatiMaxIter; ++iter) {
    const Eigen::MatrixXd FP = F * P;
    const Eigen::MatrixXd S = H * P * H.transpose() + R;
    const Eigen::MatrixXd K = S.ldlt().solve(H * P * F.transpose());
    Eigen::MatrixXd next = FP * F.transpose() - FP * H.transpose() * K + Q;
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite()) break;
    const double change = (next - P).cwiseAbs().maxCoeff();
    const double size = std::max(1.0, next.cwiseAbs().maxCoeff());
    P = std::move(next);
    if (change < kRiccatiTol * size) {
      converged = true;
      break;
    }
  }
  if (!converged) throw DesignError("Riccati recursion did not converge");

  const Eigen::MatrixXd S = H * P * H.transpose() + R;
  const Eigen::MatrixXd L = S.ldlt().solve(H * P * F.transpose()).transpose();
  const double rho = spectral_radius(F - L * H);
  if (!(rho < 1.0 - kSchurMargin)) {
    throw DesignError("output injection is not Schur: radius " + std::to_string(rho));
  }
  return L;
}

Eigen::MatrixXd mode_error_matrix(double k, const Eigen::MatrixXd& reduced,
                                  const Eigen::MatrixXd& block) {
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(reduced.rows(), reduced.cols());
  return kron(I - k * reduced, block);
}

KronSpectrumReport kron_spectrum_check(double k, const Eigen::MatrixXd& reduced,
                                       const Eigen::MatrixXd& block) {
  KronSpectrumReport report;
  const auto mus = eigenvalues(reduced);
  const auto lambdas = eigenvalues(block);
  for (const auto& mu : mus) {
    for (const auto& lambda : lambdas) report.products.push_back((1.0 - k * mu) * lambda);
  }
  report.direct = eigenvalues(mode_error_matrix(k, reduced, block));
  report.max_mismatch = hausdorff_distance(report.products, report.direct);
  return report;
}

double GainPlan::gain(ModeId id) const {
  const auto it = coupling.find(id);
  return it == coupling.end() ? 0.0 : it->second;
}

std::map<ModeId, ModeDesign> analyze_modes(const PlantModel& model, const CommGraph& graph,
                                           const ModeAgentSets& sets) {
  std::map<ModeId, ModeDesign> out;
  for (const ModeId id : model.unstable_modes()) {
    ModeDesign d;
    d.mode = id;
    const auto it = sets.find(id);
    const std::vector<int> full = it == sets.end() ? std::vector<int>{} : it->second.full;
    d.consensus_agents = complement(graph.N(), full);
    d.reduced = reduced_laplacian(graph.laplacian(), full);
    d.spectrum = eigenvalues(d.reduced);
    d.interval = feasible_interval(model.eig(id.eig).modulus(), d.spectrum);
    d.forest = spanning_forest_diagnostic(graph, full);
    out.emplace(id, std::move(d));
  }
  return out;
}

GainPlan design_gains(const PlantModel& model, const CommGraph& graph,
                      const StructureAnalysis& structure, const CouplingGains& user) {
  if (!structure.assumptions.holds()) {
    throw AssumptionError("assumptions fail; gains cannot be designed");
  }
  GainPlan plan;
  plan.modes = analyze_modes(model, graph, structure.sets);

  std::vector<InfeasibleMode> bad;
  std::string what = "no feasible coupling gain for";
  for (const auto& [id, d] : plan.modes) {
    if (!d.interval.empty) continue;
    bad.push_back({id, d.interval, d.forest});
    what += " mode (" + id.label() + ")";
    if (!d.forest.orphaned.empty()) what += " [orphaned agents " + agents_label(d.forest.orphaned) + "]";
  }
  if (!bad.empty()) throw InfeasibleError(what, std::move(bad));

  std::map<ModeId, FeasibleInterval> intervals;
  for (const auto& [id, d] : plan.modes) intervals.emplace(id, d.interval);
  plan.coupling = pick_coupling_gains(intervals, user);

  for (const DetectableSubsystem& sub : structure.subsystems) {
    try {
      plan.luenberger.push_back(design_output_injection(sub.F, sub.H));
    } catch (const DesignError& e) {
      throw DesignError("agent " + std::to_string(sub.agent + 1) + ": " + e.what());
    }
  }
  verify_plan(plan, model, graph, structure);
  return plan;
}

void verify_plan(GainPlan& plan, const PlantModel& model, const CommGraph& graph,
                 const StructureAnalysis& structure) {
  if (plan.luenberger.size() != structure.subsystems.size()) {
    throw DesignError("plan has " + std::to_string(plan.luenberger.size()) +
                      " Luenberger gains, expected one per agent");
  }
  plan.verified = true;
  plan.luenberger_radius.clear();
  for (std::size_t i = 0; i < structure.subsystems.size(); ++i) {
    const DetectableSubsystem& sub = structure.subsystems[i];
    const Eigen::MatrixXd& L = plan.luenberger[i];
    if (L.rows() != sub.F.rows() || L.cols() != sub.H.rows()) {
      throw DesignError("agent " + std::to_string(i + 1) + ": Luenberger gain has wrong shape");
    }
    const double rho = sub.dim() == 0 ? 0.0 : spectral_radius(sub.F - L * sub.H);
    plan.luenberger_radius.push_back(rho);
    if (!(rho < 1.0 - kSchurMargin)) plan.verified = false;
  }
  if (plan.modes.empty()) plan.modes = analyze_modes(model, graph, structure.sets);
  for (auto& [id, d] : plan.modes) {
    d.gain = plan.gain(id);
    d.radius = mode_radius(d.gain, d.reduced, model.block_matrix(id));
    if (!d.interval.unconstrained && !(d.radius < 1.0 - kSchurMargin)) plan.verified = false;
  }
}

}  // namespace distobs
