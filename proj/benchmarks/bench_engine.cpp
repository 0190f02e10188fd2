#include <benchmark/benchmark.h>

#include "scimcheck/corpus.hpp"
#include "scimcheck/properties.hpp"
#include "scimcheck/solvers.hpp"

namespace {

using namespace scim;

void BM_WorldSweep(benchmark::State& state) {
  NamedModel nm = random_shutdown_problem(GeneratorConfig{.seed = 42});
  Engine eng(nm.problem.model());
  PolicySpace space(nm.problem.model());
  Policy pol = space.first();
  std::vector<int> vals(nm.problem.model().var_count());
  for (auto _ : state) {
    for (long long w = 0; w < eng.worlds(); ++w) {
      eng.eval(w, pol, vals);
      benchmark::DoNotOptimize(vals.data());
    }
  }
  state.SetItemsProcessed(state.iterations() * eng.worlds());
}
BENCHMARK(BM_WorldSweep);

void BM_PolicyFacts(benchmark::State& state) {
  NamedModel nm = random_shutdown_problem(GeneratorConfig{.seed = 42});
  Engine eng(nm.problem.model());
  PolicyAnalyzer analyzer(eng, nm.problem);
  PolicySpace space(nm.problem.model());
  Policy pol = space.first();
  for (auto _ : state) {
    PolicyFacts f = analyzer.analyze(pol);
    benchmark::DoNotOptimize(f);
    if (!space.next(pol)) pol = space.first();
  }
}
BENCHMARK(BM_PolicyFacts);

void BM_ConstrainedSolveRunningExample(benchmark::State& state) {
  NamedModel nm = running_example();
  for (auto _ : state) {
    SolveResult res = solve_constrained(nm.problem, Objective::utility("U"));
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_ConstrainedSolveRunningExample);

void BM_VigilanceWitness(benchmark::State& state) {
  NamedModel nm = running_example();
  Policy pol = make_policy(nm.problem.model(), {{"M", {1}}, {"O", {0, 1}}});
  for (auto _ : state) {
    WitnessResult w = construct_vigilance_witness(nm.problem, pol, Rational(0));
    benchmark::DoNotOptimize(w);
  }
}
BENCHMARK(BM_VigilanceWitness);

}  // namespace

BENCHMARK_MAIN();
