#include <benchmark/benchmark.h>

#include "txpredict/checker.hpp"
#include "txpredict/predictor.hpp"
#include "txpredict/store.hpp"
#include "txpredict/trace_io.hpp"

using namespace txpredict;

namespace {

RunResult observed(BuiltinWorkload w, std::size_t sessions, std::size_t txns) {
  return run_workload(Workload::builtin(w), sessions, txns, 1, LatestWriter{});
}

RunResult weak(std::size_t sessions, std::size_t txns) {
  return run_workload(Workload::builtin(BuiltinWorkload::SmallbankLite), sessions, txns, 3,
                      RandomWeak{IsolationLevel::Causal, 3});
}

void BM_ParseAndBuild(benchmark::State& state) {
  const auto text = emit_trace(weak(4, state.range(0)).trace);
  for (auto _ : state) benchmark::DoNotOptimize(build_history(parse_trace(text)));
}
BENCHMARK(BM_ParseAndBuild)->Arg(2)->Arg(8)->Arg(32);

void BM_CheckCausal(benchmark::State& state) {
  const auto h = weak(4, state.range(0)).history;
  for (auto _ : state) benchmark::DoNotOptimize(check_causal(h));
}
BENCHMARK(BM_CheckCausal)->Arg(2)->Arg(8)->Arg(32);

void BM_CheckRc(benchmark::State& state) {
  const auto h = weak(4, state.range(0)).history;
  for (auto _ : state) benchmark::DoNotOptimize(check_rc(h));
}
BENCHMARK(BM_CheckRc)->Arg(2)->Arg(8)->Arg(32);

void BM_Fixpoint(benchmark::State& state) {
  const auto h = weak(4, state.range(0)).history;
  for (auto _ : state) benchmark::DoNotOptimize(PcoFixpoint(h).cyclic());
}
BENCHMARK(BM_Fixpoint)->Arg(2)->Arg(8)->Arg(32);

void BM_SerialSearch(benchmark::State& state) {
  const auto h = observed(BuiltinWorkload::SmallbankLite, 3, state.range(0)).history;
  for (auto _ : state) benchmark::DoNotOptimize(search_serializable(h, 0));
}
BENCHMARK(BM_SerialSearch)->Arg(1)->Arg(2)->Arg(3);

void BM_BuildProgram(benchmark::State& state) {
  const auto h = observed(BuiltinWorkload::SmallbankLite, 3, state.range(0)).history;
  PredictOptions o;
  o.strategy = Strategy::ApproxRelaxed;
  for (auto _ : state) benchmark::DoNotOptimize(build_program(h, o));
}
BENCHMARK(BM_BuildProgram)->Arg(1)->Arg(2)->Arg(4);

void BM_Predict(benchmark::State& state) {
  if (!smt::backend_available()) {
    state.SkipWithError("no solver backend");
    return;
  }
  const auto h = observed(BuiltinWorkload::SmallbankLite, 3, state.range(1)).history;
  PredictOptions o;
  o.strategy = static_cast<Strategy>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(predict(h, o));
  state.SetLabel(to_string(o.strategy));
}
BENCHMARK(BM_Predict)
    ->ArgsProduct({{static_cast<int>(Strategy::ExactStrict), static_cast<int>(Strategy::ApproxStrict),
                    static_cast<int>(Strategy::ApproxRelaxed)},
                   {1, 2}})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
