// Serial reference vs OpenMP kernels, plus serial vs parallel evaluation.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pima/data/dataset.hpp"
#include "pima/data/split.hpp"
#include "pima/eval/eval.hpp"
#include "pima/model/model.hpp"
#include "pima/numerics/kernels.hpp"

using namespace pima;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

template <void (*Gemm)(const kernels::MatrixView&, const kernels::MatrixView&, std::span<double>, bool)>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  const kernels::MatrixView va{a, n, n, false}, vb{b, n, n, true};
  for (auto _ : state) {
    Gemm(va, vb, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
  state.counters["threads"] = kernels::max_threads();
}

BENCHMARK_TEMPLATE(BM_gemm, kernels::gemm_serial)->Name("gemm/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK_TEMPLATE(BM_gemm, kernels::gemm_parallel)->Name("gemm/parallel")->RangeMultiplier(2)->Range(32, 256);

struct EvalFixture {
  data::SplitDataset split;
  model::Model model;

  EvalFixture() : split(data::make_split(data::generate_dataset({}, 0), data::Scenario::S2_1, 0)) {
    model::ModelConfig cfg;
    cfg.vocab_size = split.vocab.size();
    model = model::init_model(cfg, 0);
  }
};

const EvalFixture& fixture() {
  static const EvalFixture f;
  return f;
}

void BM_evaluate(benchmark::State& state) {
  const auto& f = fixture();
  const auto mode = state.range(0) ? eval::Execution::Parallel : eval::Execution::Serial;
  for (auto _ : state) {
    auto report = eval::evaluate(f.model, f.split.test, {}, mode);
    benchmark::DoNotOptimize(report.f1_avg);
  }
  state.SetLabel(state.range(0) ? "parallel" : "serial");
  state.counters["threads"] = kernels::max_threads();
}

BENCHMARK(BM_evaluate)->Name("evaluate")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
