#include <benchmark/benchmark.h>

#include "sisalloc/config.hpp"
#include "sisalloc/dadmm.hpp"
#include "sisalloc/experiment.hpp"
#include "sisalloc/spectral.hpp"

using namespace sisalloc;

namespace {

AllocationProblem instance(int n)
{
    ExperimentConfig cfg;
    cfg.n = n;
    return make_problem(cfg, make_graph(cfg));
}

void BM_Perron(benchmark::State& state)
{
    const auto g = random_strongly_connected(static_cast<int>(state.range(0)), 0.32, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(perron(g.weights()).value);
}
BENCHMARK(BM_Perron)->Arg(8)->Arg(20)->Arg(100);

void BM_CentralizedSolve(benchmark::State& state)
{
    const auto prob = instance(static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_centralized(prob).total_cost);
}
BENCHMARK(BM_CentralizedSolve)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_DadmmRound(benchmark::State& state)
{
    const auto prob = instance(static_cast<int>(state.range(0)));
    std::vector<AgentContext> ctx;
    for (int i = 0; i < prob.size(); ++i)
        ctx.push_back(make_agent_context(prob, i));
    const auto start = init_agents(prob, 0);
    for (auto _ : state) {
        auto agents = start;
        std::vector<Vector> shared;
        for (const auto& a : agents)
            shared.push_back(shared_value(a, PenaltyDomain::Log));
        dual_update(agents, shared, 4.0);
        for (auto& a : agents) {
            std::map<int, Vector> inbox;
            for (int j : a.neighbors)
                inbox[j] = shared[static_cast<std::size_t>(j)];
            a = local_step(ctx[static_cast<std::size_t>(a.id)], a, inbox, 4.0, PenaltyDomain::Log);
        }
        benchmark::DoNotOptimize(agents.front().y_beta);
    }
}
BENCHMARK(BM_DadmmRound)->Arg(8)->Arg(20)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
