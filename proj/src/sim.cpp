#include "distobs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "distobs/linalg.hpp"

namespace distobs {

namespace {

struct AgentState {
  Eigen::VectorXd z;    // local observer state ẑ_d
  Eigen::VectorXd x_u;  // consensus-layer estimate
};

std::vector<AgentState> initial_states(const PlantModel& model, const StructureAnalysis& structure,
                                       const SimConfig& config) {
  const int N = static_cast<int>(structure.subsystems.size());
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<AgentState> out;
  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(model.n());
    switch (config.observer_init) {
      case ObserverInit::kZero:
        break;
      case ObserverInit::kRandom:
        for (int k = 0; k < model.n(); ++k) full(k) = dist(rng);
        break;
      case ObserverInit::kExplicit:
        if (static_cast<int>(config.explicit_init.size()) != N ||
            config.explicit_init[i].size() != model.n()) {
          throw std::invalid_argument("explicit observer init needs one n-vector per agent");
        }
        full = config.explicit_init[i];
        break;
    }
    out.push_back({gather(full, structure.subsystems[i].index_map),
                   gather(full, structure.partitions[i].index_map)});
  }
  return out;
}

}  // namespace

Eigen::VectorXd step_plant(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                           const PlantModel& model) {
  return model.A() * x + model.B() * u;
}

Eigen::VectorXd step_local_observer(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& u, const DetectableSubsystem& sub,
                                    const Eigen::MatrixXd& L) {
  return sub.F * z + sub.G * u + L * (y - sub.H * z);
}

Eigen::VectorXd step_consensus_layer(int agent, const Eigen::VectorXd& x_u,
                                     std::span<const Eigen::VectorXd> estimates,
                                     const Eigen::VectorXd& u, const ConsensusPartition& part,
                                     const CouplingGains& gains, const CommGraph& graph) {
  const auto& neighbors = graph.neighbors(agent);
  for (int j : neighbors) {
    if (j >= static_cast<int>(estimates.size()) || estimates[j].size() == 0) {
      throw std::invalid_argument("missing estimate of neighbor " + std::to_string(j + 1) +
                                  " for agent " + std::to_string(agent + 1));
    }
  }
  Eigen::VectorXd next(x_u.size());
  for (std::size_t m = 0; m < part.modes.size(); ++m) {
    const int off = part.mode_offsets[m];
    const int size = m + 1 < part.modes.size() ? part.mode_offsets[m + 1] - off : part.dim() - off;
    const int global = part.index_map[off];
    const auto it = gains.find(part.modes[m]);
    const double k = it == gains.end() ? 0.0 : it->second;

    const auto own = x_u.segment(off, size);
    Eigen::VectorXd pull = Eigen::VectorXd::Zero(size);
    for (int j : neighbors) pull += graph.weight(agent, j) * (estimates[j].segment(global, size) - own);
    next.segment(off, size) = part.A_u.block(off, off, size, size) * (own + k * pull) +
                              part.B_u.middleRows(off, size) * u;
  }
  return next;
}

Eigen::VectorXd assemble_estimate(const Eigen::VectorXd& z, const Eigen::VectorXd& x_u,
                                  const DetectableSubsystem& sub, const ConsensusPartition& part,
                                  int n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = sub.num_tail; k < sub.dim(); ++k) out(sub.index_map[k]) = z(k);
  for (int k = 0; k < part.dim(); ++k) out(part.index_map[k]) = x_u(k);
  return out;
}

Eigen::VectorXd SimulationTrace::original_state(int t) const {
  return transform ? Eigen::VectorXd(*transform * x[t]) : x[t];
}

Eigen::VectorXd SimulationTrace::original_estimate(int t, int agent) const {
  return transform ? Eigen::VectorXd(*transform * estimates[t][agent]) : estimates[t][agent];
}

SimulationTrace run(const PlantModel& model, const SensorSuite& sensors, const CommGraph& graph,
                    const StructureAnalysis& structure, const GainPlan& plan,
                    const SimConfig& config, RunOptions options) {
  if (options.require_verified && !plan.verified) {
    throw std::invalid_argument("gain plan is not verified");
  }
  const int n = model.n();
  const int N = sensors.N();
  const int T = config.horizon;
  if (static_cast<int>(structure.subsystems.size()) != N ||
      static_cast<int>(plan.luenberger.size()) != N) {
    throw std::invalid_argument("structure and plan must cover every agent");
  }

  SimulationTrace trace;
  trace.n = n;
  trace.N = N;
  trace.horizon = T;
  for (const MiniblockSpec& b : model.miniblocks()) trace.modes.push_back(b.id());
  trace.transform = model.transform();
  trace.x.reserve(T + 1);
  trace.estimates.reserve(T + 1);
  trace.mode_err.reserve(T + 1);
  trace.err_norm.resize(T + 1, N);

  const int num_modes = static_cast<int>(trace.modes.size());
  std::vector<AgentState> state = initial_states(model, structure, config);
  std::vector<AgentState> next_state(N);
  Eigen::VectorXd x = config.x0.size() == n ? config.x0 : Eigen::VectorXd::Zero(n);
  const bool parallel = options.execution == Execution::kParallel;

  for (int t = 0; t <= T; ++t) {
    const Eigen::VectorXd u = config.input_at(t, model.m());
    std::vector<Eigen::VectorXd> estimates(N);
    Eigen::MatrixXd mode_err(N, num_modes);

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < N; ++i) {
      estimates[i] = assemble_estimate(state[i].z, state[i].x_u, structure.subsystems[i],
                                       structure.partitions[i], n);
      const Eigen::VectorXd e = x - estimates[i];
      trace.err_norm(t, i) = e.norm();
      for (int m = 0; m < num_modes; ++m) {
        const MiniblockSpec& b = model.miniblocks()[m];
        mode_err(i, m) = e.segment(b.state_offset, b.size()).norm();
      }
    }

    const double plant_norm = x.norm();
    if (!std::isfinite(plant_norm) || plant_norm > kOverflowNorm) {
      throw SimulationDiverged("plant state norm exceeds 1e12 at step " + std::to_string(t), t, -1);
    }
    for (int i = 0; i < N; ++i) {
      const double e = trace.err_norm(t, i);
      if (!std::isfinite(e) || e > kOverflowNorm) {
        throw SimulationDiverged("estimation error of agent " + std::to_string(i + 1) +
                                     " exceeds 1e12 at step " + std::to_string(t),
                                 t, i);
      }
    }

    trace.x.push_back(x);
    trace.estimates.push_back(estimates);
    trace.mode_err.push_back(std::move(mode_err));
    if (t == T) break;

#pragma omp parallel for schedule(static) if (parallel)
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd y = sensors.C[i] * x;
      next_state[i].z =
          step_local_observer(state[i].z, y, u, structure.subsystems[i], plan.luenberger[i]);
      next_state[i].x_u = step_consensus_layer(i, state[i].x_u, trace.estimates.back(), u,
                                               structure.partitions[i], plan.coupling, graph);
    }
    std::swap(state, next_state);
    x = step_plant(x, u, model);
  }
  return trace;
}

double decay_rate(std::span<const double> norms) {
  if (norms.size() < 2) return 0.0;
  const std::size_t last = norms.size() - 1;
  const std::size_t first = last / 2;
  if (first == last || !(norms[first] > 0.0)) return 0.0;
  return std::pow(norms[last] / norms[first], 1.0 / static_cast<double>(last - first));
}

ErrorMetrics error_metrics(const Eigen::MatrixXd& err_norm) {
  ErrorMetrics out;
  const Eigen::Index steps = err_norm.rows();
  if (steps == 0) throw std::invalid_argument("error_metrics: empty trace");
  std::vector<double> norms(static_cast<std::size_t>(steps));
  for (Eigen::Index i = 0; i < err_norm.cols(); ++i) {
    for (Eigen::Index t = 0; t < steps; ++t) norms[t] = err_norm(t, i);
    out.initial_norm.push_back(norms.front());
    out.final_norm.push_back(norms.back());
    out.peak_norm.push_back(*std::max_element(norms.begin(), norms.end()));
    out.decay_rate.push_back(decay_rate(norms));
  }
  for (Eigen::Index t = 0; t < steps; ++t) norms[t] = err_norm.row(t).norm();
  out.total_initial = norms.front();
  out.total_final = norms.back();
  out.total_decay_rate = decay_rate(norms);
  return out;
}

ErrorMetrics error_metrics(const SimulationTrace& trace) { return error_metrics(trace.err_norm); }

}  // namespace distobs
