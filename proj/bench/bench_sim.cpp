// Serial reference kernel against the OpenMP kernel on the Pendubot network
// and on a wider synthetic network.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "distobs/gains.hpp"
#include "distobs/sim.hpp"
#include "distobs/structure.hpp"
#include "json.hpp"

namespace {

using namespace distobs;

struct Bundle {
  Problem problem;
  StructureAnalysis structure;
  GainPlan plan;
};

Bundle pendubot() {
  Problem p = load_model(std::filesystem::path(DISTOBS_DATA_DIR) / "pendubot.json");
  StructureAnalysis s = analyze_structure(p.model, p.sensors);
  GainPlan plan = design_gains(p.model, p.graph, s);
  return {std::move(p), std::move(s), std::move(plan)};
}

// N agents on a ring, one λ = 1.1 miniblock per agent, agent i measures block i.
Bundle ring(int N) {
  nlohmann::json doc;
  doc["eigenvalues"] = {{{"re", 1.1}, {"im", 0.0}, {"miniblock_dims", std::vector<int>(N, 1)}},
                        {{"re", 0.5}, {"im", 0.0}, {"miniblock_dims", std::vector<int>(N, 2)}}};
  const int n = 3 * N;
  doc["B"] = std::vector<std::vector<double>>(n, std::vector<double>(1, 1.0));
  std::vector<std::vector<std::vector<double>>> sensors;
  std::vector<std::vector<double>> adj(N, std::vector<double>(N, 0.0));
  for (int i = 0; i < N; ++i) {
    std::vector<double> row(n, 0.0);
    row[i] = 1.0;
    row[N + 2 * i] = 1.0;
    sensors.push_back({row});
    adj[i][(i + N - 1) % N] = 1.0;
  }
  doc["sensors"] = sensors;
  doc["adjacency"] = adj;
  doc["simulation"] = {{"observer_init", "random"}, {"seed", 1}};
  Problem p = parse_model(doc.dump());
  StructureAnalysis s = analyze_structure(p.model, p.sensors);
  GainPlan plan = design_gains(p.model, p.graph, s);
  return {std::move(p), std::move(s), std::move(plan)};
}

void run_bench(benchmark::State& state, const Bundle& b, Execution execution) {
  SimConfig cfg = b.problem.sim;
  cfg.horizon = static_cast<int>(state.range(0));
  for (auto _ : state) {
    const SimulationTrace trace = run(b.problem.model, b.problem.sensors, b.problem.graph, b.structure,
                                      b.plan, cfg, {execution, true});
    benchmark::DoNotOptimize(trace.err_norm.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * b.problem.sensors.N());
}

void BM_PendubotSerial(benchmark::State& state) {
  static const Bundle b = pendubot();
  run_bench(state, b, Execution::kSerial);
}
void BM_PendubotParallel(benchmark::State& state) {
  static const Bundle b = pendubot();
  run_bench(state, b, Execution::kParallel);
}
void BM_RingSerial(benchmark::State& state) {
  static const Bundle b = ring(48);
  run_bench(state, b, Execution::kSerial);
}
void BM_RingParallel(benchmark::State& state) {
  static const Bundle b = ring(48);
  run_bench(state, b, Execution::kParallel);
}

BENCHMARK(BM_PendubotSerial)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PendubotParallel)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RingSerial)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RingParallel)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
