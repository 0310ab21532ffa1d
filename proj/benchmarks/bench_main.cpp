#include <benchmark/benchmark.h>

#include "seriate/constraints.hpp"
#include "seriate/datagen.hpp"
#include "seriate/sampler.hpp"
#include "seriate/seqmodel.hpp"
#include "seriate/set_backend.hpp"
#include "seriate/tree_backend.hpp"

using namespace seriate;

namespace {

void BM_SampleSetStreaming(benchmark::State& state) {
  SetBackend backend({"A", "B", "C", "D", "E", "F", "G", "H"});
  std::vector<std::string> elems;
  for (int i = 0; i < state.range(0); ++i)
    elems.push_back(std::string(1, static_cast<char>('A' + i)));
  const SetInstance x = SetInstance::of(elems);
  SamplerConfig cfg;
  cfg.mode = SamplerConfig::Mode::Streaming;
  Philox rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_serialization(backend, x, cfg, rng));
}
BENCHMARK(BM_SampleSetStreaming)->Arg(4)->Arg(8);

void BM_SampleTreeStreaming(benchmark::State& state) {
  TreeBackend backend({"A", "B", "C"}, false);
  Philox gen(7);
  const TreeInstance x =
      generate_random_trees({"A", "B", "C"}, 1, state.range(0), gen).front();
  SamplerConfig cfg;
  cfg.mode = SamplerConfig::Mode::Streaming;
  Philox rng(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_serialization(backend, x, cfg, rng));
}
BENCHMARK(BM_SampleTreeStreaming)->Arg(8)->Arg(16);

void BM_BuildConstraintMatrix(benchmark::State& state) {
  SetBackend backend({"A", "B", "C", "D", "E", "F"});
  Philox rng(3);
  SamplerConfig cfg;
  std::vector<Serialization> batch;
  const SetInstance x = SetInstance::of({"A", "B", "C", "D", "E", "F"});
  for (int i = 0; i < state.range(0); ++i)
    batch.push_back(sample_serialization(backend, x, cfg, rng));
  for (auto _ : state)
    benchmark::DoNotOptimize(build_constraint_matrix(backend, batch));
}
BENCHMARK(BM_BuildConstraintMatrix)->Arg(16)->Arg(64);

void BM_LossGrad(benchmark::State& state) {
  SetBackend backend({"A", "B", "C", "D", "E", "F"});
  Philox rng(5);
  SamplerConfig cfg;
  std::vector<Serialization> batch;
  const SetInstance x = SetInstance::of({"A", "B", "C", "D", "E", "F"});
  for (int i = 0; i < 16; ++i)
    batch.push_back(sample_serialization(backend, x, cfg, rng));
  const auto constraints = build_constraint_matrix(backend, batch);
  ModelParams params =
      ModelParams::init(state.range(0), backend.alphabet().size(), 2, rng);
  for (auto _ : state) {
    Gradients grads = Gradients::zero_like(params);
    benchmark::DoNotOptimize(
        loss_grad(params, backend.alphabet(), batch, constraints, 1.0, grads));
  }
}
BENCHMARK(BM_LossGrad)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
